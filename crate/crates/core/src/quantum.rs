//! Classical simulation of the quantum query model.
//!
//! Amplitude estimation with `M` Grover-operator applications on amplitude
//! `a = sin²(πθ)` is realised by sampling its exact outcome distribution
//! `P(y) = sin²(MΔπ) / (M sin(Δπ))²`, `Δ = θ − y/M`, and returning
//! `sin²(πy/M)`. Each round charges exactly `M` queries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::amplify::{median_in_place, repetitions};
use crate::error::{domain, Error, Result};
use crate::holder::Density;
use crate::integrate::{det_constant, PiecewiseInterpolant};
use crate::scalar::{factorial, Real};

/// Query ledger and randomness for one quantum algorithm run.
#[derive(Clone, Debug)]
pub struct QuerySimState {
    pub queries_used: u64,
    pub rng: ChaCha8Rng,
}

impl QuerySimState {
    pub fn new(seed: u64) -> Self {
        Self {
            queries_used: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn from_rng(rng: ChaCha8Rng) -> Self {
        Self {
            queries_used: 0,
            rng,
        }
    }
}

/// `P(y)` for one outcome of `M`-query amplitude estimation.
pub fn qae_probability(a: f64, m: usize, y: usize) -> f64 {
    let theta = a.sqrt().asin() / std::f64::consts::PI;
    fejer(m, theta - y as f64 / m as f64)
}

fn fejer(m: usize, delta: f64) -> f64 {
    let mf = m as f64;
    let den = (delta * std::f64::consts::PI).sin();
    if den.abs() < 1e-300 {
        return 1.0;
    }
    let num = (mf * delta * std::f64::consts::PI).sin();
    let v = (num / (mf * den)).powi(2);
    // near Δ = 0 the ratio loses digits; the kernel is at most one
    v.min(1.0)
}

/// Full outcome distribution over `y ∈ {0, …, M−1}`.
pub fn qae_pmf(a: f64, m: usize) -> Vec<f64> {
    (0..m).map(|y| qae_probability(a, m, y)).collect()
}

/// Estimate attached to outcome `y`.
pub fn qae_estimate(m: usize, y: usize) -> f64 {
    (std::f64::consts::PI * y as f64 / m as f64).sin().powi(2)
}

/// Draws the outcome index of one amplitude-estimation round.
pub fn qae_sample_outcome<R: Rng + ?Sized>(a: f64, m: usize, rng: &mut R) -> usize {
    let theta = a.sqrt().asin() / std::f64::consts::PI;
    let centre = (theta * m as f64).floor() as i64;
    let u: f64 = rng.random();
    // Inverse-CDF over outcomes visited outward from the peak: a fixed
    // permutation of {0..M−1}, so the sampled law is exactly P.
    let mut acc = 0.0;
    let mut last = centre.rem_euclid(m as i64) as usize;
    for k in 0..m as i64 {
        let offset = if k % 2 == 0 { k / 2 } else { -(k + 1) / 2 };
        let y = (centre + offset).rem_euclid(m as i64) as usize;
        acc += fejer(m, theta - y as f64 / m as f64);
        last = y;
        if u < acc {
            return y;
        }
    }
    last
}

/// One round of `M`-query amplitude estimation on true amplitude `a`.
///
/// With probability `≥ 8/π²`,
/// `|â − a| ≤ 2π√(a(1−a))/M + π²/M²`.
pub fn qae_sample(a: f64, m: usize, state: &mut QuerySimState) -> Result<f64> {
    if m == 0 {
        return Err(domain("M must be positive"));
    }
    if !(0.0..=1.0).contains(&a) {
        return Err(domain(format!("amplitude {a} outside [0, 1]")));
    }
    let y = qae_sample_outcome(a, m, &mut state.rng);
    state.queries_used += m as u64;
    Ok(qae_estimate(m, y))
}

/// Power-of-two `M` with `π/M + π²/M² ≤ eps`, the worst case (`a = 1/2`)
/// of the amplitude-estimation error bound.
pub fn grover_budget(eps: f64) -> usize {
    let pi = std::f64::consts::PI;
    // x = π/M solves x + x² = eps
    let x = (-1.0 + (1.0 + 4.0 * eps).sqrt()) / 2.0;
    let mut m = (pi / x).ceil() as usize;
    while pi / m as f64 + (pi / m as f64).powi(2) > eps {
        m += 1;
    }
    m.next_power_of_two()
}

/// Planned cost of one [`qmean`] call.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QmeanPlan {
    pub grover: usize,
    pub rounds: usize,
    /// `true` when exact classical summation is no more expensive.
    pub classical: bool,
}

pub fn qmean_plan(n: usize, eps: f64, delta: f64) -> QmeanPlan {
    let grover = grover_budget(eps);
    let rounds = repetitions(delta);
    QmeanPlan {
        grover,
        rounds,
        classical: grover.saturating_mul(rounds) >= n,
    }
}

/// Sum, minimum and maximum of `g(0..n)` without storing the values.
///
/// Fixed-size chunks are summed in parallel and combined in index order, so
/// the result does not depend on the thread schedule.
fn sequence_stats(g: &(impl Fn(usize) -> f64 + Sync), n: usize) -> (f64, f64, f64) {
    use rayon::prelude::*;
    const CHUNK: usize = 1 << 14;
    let chunk = |c: usize| {
        let (lo, hi) = (c * CHUNK, ((c + 1) * CHUNK).min(n));
        (lo..hi)
            .map(g)
            .fold((0.0, f64::INFINITY, f64::NEG_INFINITY), |(s, mn, mx), v| {
                (s + v, mn.min(v), mx.max(v))
            })
    };
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<(f64, f64, f64)> = if chunks > 1 {
        (0..chunks).into_par_iter().map(chunk).collect()
    } else {
        (0..chunks).map(chunk).collect()
    };
    parts.into_iter().fold(
        (0.0, f64::INFINITY, f64::NEG_INFINITY),
        |(s, mn, mx), (a, b, c)| (s + a, mn.min(b), mx.max(c)),
    )
}

/// Quantum mean of a sequence `g: {0..N−1} → [0, 1]`.
///
/// The mean is the amplitude; `M = Θ(1/eps)` and `Θ(log 1/δ)` median rounds.
/// When that would cost at least `N` queries the exact mean is summed
/// classically at cost `N`. Cost `O(min{N, ε⁻¹ log(1/δ)})`.
pub fn qmean(
    g: impl Fn(usize) -> f64 + Sync,
    n: usize,
    eps: f64,
    delta: f64,
    state: &mut QuerySimState,
) -> Result<f64> {
    if n == 0 {
        return Err(domain("sequence must be nonempty"));
    }
    if !(eps > 0.0) {
        return Err(domain("eps must be positive"));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(domain(format!("delta = {delta} outside (0, 1/2)")));
    }
    let (sum, lo, hi) = sequence_stats(&g, n);
    if let Some(bad) = [lo, hi].into_iter().find(|v| !(0.0..=1.0).contains(v)) {
        return Err(domain(format!("sequence value {bad} outside [0, 1]")));
    }
    qmean_from_mean(sum / n as f64, n, eps, delta, state)
}

/// Simulated [`qmean`] once the exact mean of the `n` values is known.
fn qmean_from_mean(
    mean: f64,
    n: usize,
    eps: f64,
    delta: f64,
    state: &mut QuerySimState,
) -> Result<f64> {
    let plan = qmean_plan(n, eps, delta);
    if plan.classical {
        state.queries_used += n as u64;
        return Ok(mean);
    }
    let mut est = Vec::with_capacity(plan.rounds);
    for _ in 0..plan.rounds {
        est.push(qae_sample(mean.clamp(0.0, 1.0), plan.grover, state)?);
    }
    Ok(median_in_place(&mut est))
}

/// Sizes of one quantum integration call.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantumPlan {
    /// Interpolation cells (classical queries).
    pub cells: usize,
    /// Midpoint sub-cells per interpolation cell in the residual grid.
    pub subcells: usize,
    /// Precision demanded from [`qmean`] on the rescaled residual.
    pub mean_eps: f64,
}

/// Quantum integration over `[a, b]`: `|result − ∫| ≤ eps` with probability `≥ 1 − delta`.
///
/// Main-part separation: `p` interpolates `f` on `n = Θ(ε^{-1/(r+ρ+1)})`
/// cells; the residual `e = f − p` (bounded by `R` on the class) is mapped to
/// `u = e/(2R) + 1/2 ∈ [0, 1]`, sampled at the midpoints of a uniform
/// refinement fine enough that the midpoint sum of `e` is within `ε/4` of
/// `∫e`, and its mean is estimated by [`qmean`] to `3ε/(8RL)`.
pub fn integrate_quantum<T: Real>(
    d: &Density<T>,
    a: T,
    b: T,
    eps: T,
    delta: T,
    state: &mut QuerySimState,
) -> Result<T> {
    if !(a >= T::zero() && b <= T::one()) || a > b {
        return Err(domain(format!("invalid interval [{a}, {b}]")));
    }
    if !(eps > T::zero()) {
        return Err(domain("eps must be positive"));
    }
    if !(delta > T::zero() && delta < T::lit(0.5)) {
        return Err(domain(format!("delta = {delta} outside (0, 1/2)")));
    }
    if a == b {
        return Ok(T::zero());
    }
    let params = *d.params();
    let length = (b - a).as_f64();
    let eps64 = eps.as_f64();
    let plan = quantum_plan(&params, length, eps64, delta.as_f64());

    let p = PiecewiseInterpolant::build(d, a, b, plan.cells)?;
    let bound = p.residual_bound(&params).as_f64();
    let cells = plan.cells;
    let sub = plan.subcells;
    let total = cells * sub;
    let fine = (b - a) / T::from_usize_lossy(total);
    let residual = |j: usize| -> f64 {
        let x = (a + fine * (T::from_usize_lossy(j) + T::lit(0.5))).min(b);
        (d.eval_uncounted(x, 0) - p.eval(x)).as_f64()
    };
    let (sum, lo, hi) = sequence_stats(&residual, total);
    if let Some(bad) = [lo, hi].into_iter().find(|e| e.abs() > bound) {
        return Err(Error::InternalInvariant(format!(
            "residual {bad:e} exceeds proven bound {bound:e}"
        )));
    }
    let mean_scaled = sum / total as f64 / (2.0 * bound) + 0.5;

    let before = state.queries_used;
    let mean_u = qmean_from_mean(mean_scaled, total, plan.mean_eps, delta.as_f64(), state)?;
    d.charge(state.queries_used - before);

    let correction = length * 2.0 * bound * (mean_u - 0.5);
    Ok(p.integral() + T::lit(correction))
}

/// Chooses cells, refinement and mean precision for [`integrate_quantum`].
pub fn quantum_plan<T: Real>(
    params: &crate::holder::HolderParams<T>,
    length: f64,
    eps: f64,
    delta: f64,
) -> QuantumPlan {
    let s = params.smoothness().as_f64();
    let c = det_constant(params).as_f64();
    // Balances n classical nodes against ≈ 8πRL/(3ε) Grover applications.
    let cells = ((8.0 * std::f64::consts::PI * c * length.powf(s + 1.0) / (3.0 * eps))
        .powf(1.0 / (s + 1.0)))
    .ceil()
    .max(1.0) as usize;
    let h = length / cells as f64;
    let bound = c * h.powf(s);
    let mean_eps = 3.0 * eps / (8.0 * bound * length);

    // Midpoint-rule error per unit length on each cell, for sub-cell width w.
    let r = params.r;
    let rho = params.rho.as_f64();
    let hh = params.h.as_f64();
    let per_length = |w: f64| -> f64 {
        match r {
            0 => hh * (w / 2.0).powf(rho),
            1 => hh * (w / 2.0).powf(1.0 + rho),
            _ => {
                let rule = crate::quadrature::EquispacedRule::<f64>::new(r);
                let second = hh
                    * h.powf(s - 2.0)
                    * (1.0 / factorial::<f64>(r - 2)
                        + rule.derivative_lebesgue(2) / factorial::<f64>(r));
                second * w * w / 24.0
            }
        }
    };
    let mut subcells = 1usize;
    while length * per_length(h / subcells as f64) > eps / 4.0 {
        subcells *= 2;
    }
    // A grid finer than the quantum cost keeps qmean on its amplitude route.
    let rounds = repetitions(delta);
    let quantum_cost = grover_budget(mean_eps).saturating_mul(rounds);
    while cells * subcells <= quantum_cost {
        subcells *= 2;
    }
    QuantumPlan {
        cells,
        subcells,
        mean_eps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holder::builtin_catalog_with;

    #[test]
    fn pmf_is_normalised() {
        for a in [0.0, 0.1, 0.3, 0.5, 0.77, 1.0] {
            for m in [1usize, 2, 7, 16, 64, 256, 1000] {
                let s: f64 = qae_pmf(a, m).iter().sum();
                assert!((s - 1.0).abs() < 1e-12, "a={a} m={m} sum={s}");
            }
        }
    }

    #[test]
    fn boundary_amplitudes_are_exact() {
        let mut st = QuerySimState::new(5);
        for m in [1usize, 3, 8, 64] {
            for _ in 0..50 {
                assert_eq!(qae_sample(0.0, m, &mut st).unwrap(), 0.0);
            }
        }
        for m in [2usize, 8, 64] {
            for _ in 0..50 {
                assert!((qae_sample(1.0, m, &mut st).unwrap() - 1.0).abs() < 1e-15);
            }
        }
        assert!(qae_sample(0.5, 0, &mut st).is_err());
    }

    #[test]
    fn each_round_charges_m() {
        let mut st = QuerySimState::new(1);
        qae_sample(0.3, 64, &mut st).unwrap();
        qae_sample(0.3, 16, &mut st).unwrap();
        assert_eq!(st.queries_used, 80);
    }

    #[test]
    fn outcomes_symmetric_in_estimate() {
        for m in [8usize, 64] {
            for y in 1..m {
                assert!((qae_estimate(m, y) - qae_estimate(m, m - y)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn grover_budget_meets_error_bound() {
        for eps in [0.3, 0.05, 1e-3, 1e-5] {
            let m = grover_budget(eps) as f64;
            let pi = std::f64::consts::PI;
            assert!(pi / m + (pi / m).powi(2) <= eps);
            assert!((m as usize).is_power_of_two());
        }
    }

    #[test]
    fn constant_sequence() {
        for seed in 0..50 {
            let mut st = QuerySimState::new(seed);
            let v = qmean(|_| 0.37, 1 << 20, 0.01, 0.01, &mut st).unwrap();
            assert!((v - 0.37).abs() <= 0.01);
        }
    }

    #[test]
    fn fallback_is_exact_and_costs_n() {
        let n = 200;
        let g = |i: usize| (i % 7) as f64 / 7.0;
        let mut st = QuerySimState::new(2);
        let v = qmean(g, n, 2.0 / n as f64, 0.1, &mut st).unwrap();
        let exact = (0..n).map(g).sum::<f64>() / n as f64;
        assert_eq!(v.to_bits(), exact.to_bits());
        assert_eq!(st.queries_used, n as u64);
    }

    #[test]
    fn qmean_rejects_bad_delta() {
        let mut st = QuerySimState::new(2);
        assert!(qmean(|_| 0.5, 10, 0.1, 0.5, &mut st).is_err());
        assert!(qmean(|_| 1.5, 10, 0.1, 0.1, &mut st).is_err());
    }

    #[test]
    fn uniform_integral_is_exact() {
        let d = builtin_catalog_with::<f64>("uniform", 1, 1.0).unwrap();
        let mut st = QuerySimState::new(9);
        let v = integrate_quantum(&d, 0.0, 1.0, 1e-4, 0.05, &mut st).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantum_cost_equals_counter_delta() {
        let d = builtin_catalog_with::<f64>("sine-0.5", 1, 1.0).unwrap();
        let mut st = QuerySimState::new(4);
        let plan = quantum_plan(d.params(), 0.7, 1e-4, 0.05);
        integrate_quantum(&d, 0.0, 0.7, 1e-4, 0.05, &mut st).unwrap();
        assert_eq!(d.queries(), (plan.cells + 1) as u64 + st.queries_used);
    }
}
