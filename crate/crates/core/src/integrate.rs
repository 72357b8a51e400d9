//! Deterministic and randomized integration oracles on Hölder classes.
//!
//! Both build on the same piecewise interpolant: `[a, b]` is cut into `n`
//! equal cells and `f` is interpolated at `r + 1` equispaced nodes per cell
//! (the midpoint when `r = 0`). The deterministic oracle integrates the
//! interpolant exactly. The randomized oracle additionally estimates the
//! residual `∫(f − p)` by plain Monte Carlo and boosts confidence with the
//! median of independent repetitions.

use rand::Rng;

use crate::amplify::{median_in_place, repetitions};
use crate::error::{domain, Result};
use crate::holder::{Density, HolderParams};
use crate::quadrature::EquispacedRule;
use crate::scalar::{factorial, Real};
use crate::setting::Setting;

/// What an integration oracle promises: `|result − ∫| ≤ target_eps`,
/// always (deterministic) or with probability `≥ 1 − target_delta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegralOracle<T> {
    pub setting: Setting,
    pub target_eps: T,
    /// Ignored in the deterministic setting.
    pub target_delta: T,
    pub params: HolderParams<T>,
}

/// `C_det` in `|∫(f − p)| ≤ C_det (b − a) h^{r+ρ}`.
///
/// Interpolation reproduces the degree-`r` Taylor polynomial, so
/// `f − p = R − I(R)` with `|R| ≤ H h^{r+ρ} / r!`, giving
/// `sup |f − p| ≤ (1 + Λ_r) H h^{r+ρ} / r!` for Lebesgue constant `Λ_r`.
pub fn det_constant<T: Real>(params: &HolderParams<T>) -> T {
    let rule = EquispacedRule::<T>::new(params.r);
    (T::one() + rule.lebesgue()) * params.h / factorial::<T>(params.r)
}

/// Smallest `n` with `c · length^{1+s} / n^s ≤ eps`.
pub fn det_budget_with_constant<T: Real>(eps: T, c: T, s: T, length: T) -> usize {
    if length <= T::zero() {
        return 1;
    }
    let bound = |n: usize| c * length.powf(T::one() + s) / T::from_usize_lossy(n).powf(s);
    let guess = (c * length.powf(T::one() + s) / eps)
        .powf(T::one() / s)
        .ceil();
    let mut n = guess.to_usize().unwrap_or(usize::MAX / 2).max(1);
    while n > 1 && bound(n - 1) <= eps {
        n -= 1;
    }
    while bound(n) > eps {
        n += 1;
    }
    n
}

/// Cell count for the deterministic oracle at accuracy `eps` over `length`.
pub fn det_budget<T: Real>(eps: T, params: &HolderParams<T>, length: T) -> usize {
    det_budget_with_constant(eps, det_constant(params), params.smoothness(), length)
}

/// Piecewise polynomial interpolant of `f` on `n` equal cells of `[a, b]`.
#[derive(Clone, Debug)]
pub struct PiecewiseInterpolant<T> {
    a: T,
    width: T,
    cells: usize,
    rule: EquispacedRule<T>,
    /// Node values, `r + 1` per cell (one for `r = 0`).
    values: Vec<Vec<T>>,
    queries: u64,
}

impl<T: Real> PiecewiseInterpolant<T> {
    /// Queries `f` at every node; endpoints shared by neighbouring cells are
    /// fetched once, so the cost is `n·r + 1` for `r ≥ 1` and `n` for `r = 0`.
    pub fn build(d: &Density<T>, a: T, b: T, n: usize) -> Result<Self> {
        check_interval(a, b)?;
        if n == 0 {
            return Err(domain("subinterval count must be positive"));
        }
        let rule = EquispacedRule::<T>::new(d.params().r);
        let width = (b - a) / T::from_usize_lossy(n);
        let before = d.queries();
        let mut values = Vec::with_capacity(n);
        let mut carried: Option<T> = None;
        for cell in 0..n {
            let left = a + width * T::from_usize_lossy(cell);
            let mut v = Vec::with_capacity(rule.nodes.len());
            for (k, &t) in rule.nodes.iter().enumerate() {
                if k == 0 && rule.degree() > 0 {
                    if let Some(shared) = carried {
                        v.push(shared);
                        continue;
                    }
                }
                let x = if cell + 1 == n && t == T::one() {
                    b
                } else {
                    left + width * t
                };
                v.push(d.eval_counted(x.min(b), 0)?);
            }
            if rule.degree() > 0 {
                carried = v.last().copied();
            }
            values.push(v);
        }
        Ok(Self {
            a,
            width,
            cells: n,
            rule,
            values,
            queries: d.queries() - before,
        })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn cell_width(&self) -> T {
        self.width
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }

    pub fn rule(&self) -> &EquispacedRule<T> {
        &self.rule
    }

    /// Exact integral of the interpolant.
    pub fn integral(&self) -> T {
        let mut acc = T::zero();
        for v in &self.values {
            let cell = v
                .iter()
                .zip(&self.rule.weights)
                .fold(T::zero(), |s, (&fv, &w)| s + w * fv);
            acc = acc + cell;
        }
        acc * self.width
    }

    /// `p(x)` for `x ∈ [a, b]`.
    pub fn eval(&self, x: T) -> T {
        let rel = (x - self.a) / self.width;
        let idx = rel.floor().to_usize().unwrap_or(0).min(self.cells - 1);
        let t = rel - T::from_usize_lossy(idx);
        self.rule.interpolate(&self.values[idx], t)
    }

    /// Proven bound on `sup |f − p|` over the class.
    pub fn residual_bound(&self, params: &HolderParams<T>) -> T {
        det_constant(params) * self.width.powf(params.smoothness())
    }
}

fn check_interval<T: Real>(a: T, b: T) -> Result<()> {
    if !(a >= T::zero() && b <= T::one()) {
        return Err(domain(format!("interval [{a}, {b}] not inside [0, 1]")));
    }
    if a > b {
        return Err(domain(format!("a = {a} exceeds b = {b}")));
    }
    Ok(())
}

/// Composite interpolatory quadrature of `f` over `[a, b]` with `n` cells.
pub fn integrate_det<T: Real>(d: &Density<T>, a: T, b: T, n: usize) -> Result<T> {
    check_interval(a, b)?;
    if n == 0 {
        return Err(domain("subinterval count must be positive"));
    }
    if a == b {
        return Ok(T::zero());
    }
    Ok(PiecewiseInterpolant::build(d, a, b, n)?.integral())
}

/// Sample sizes of one randomized integration call.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McPlan {
    /// Interpolation cells.
    pub cells: usize,
    /// Monte Carlo samples per repetition.
    pub samples: usize,
    /// Median repetitions.
    pub repetitions: usize,
}

/// Chooses `n = m` with `2 (b − a) C_det h^{r+ρ} / √m ≤ eps`, so each
/// repetition is within `eps` with probability `≥ 3/4` (Chebyshev at 2σ),
/// and `K` repetitions for confidence `1 − δ`.
pub fn mc_plan<T: Real>(params: &HolderParams<T>, length: T, eps: T, delta: T) -> McPlan {
    let s = params.smoothness();
    let half = T::lit(0.5);
    let c = T::lit(2.0) * det_constant(params);
    let cells = det_budget_with_constant(eps, c, s + half, length);
    McPlan {
        cells,
        samples: cells,
        repetitions: repetitions(delta.as_f64()),
    }
}

/// Randomized integration: `|result − ∫_a^b f| ≤ eps` with probability `≥ 1 − delta`.
///
/// Cost `O(eps^{-1/(r+ρ+1/2)} · log(1/δ))`: the interpolant's nodes are
/// shared by all repetitions; each repetition draws `m` fresh samples.
pub fn integrate_mc<T: Real, R: Rng + ?Sized>(
    d: &Density<T>,
    a: T,
    b: T,
    eps: T,
    delta: T,
    rng: &mut R,
) -> Result<T> {
    check_interval(a, b)?;
    if !(eps > T::zero()) {
        return Err(domain("eps must be positive"));
    }
    if !(delta > T::zero() && delta < T::lit(0.5)) {
        return Err(domain(format!("delta = {delta} outside (0, 1/2)")));
    }
    if a == b {
        return Ok(T::zero());
    }
    let length = b - a;
    let plan = mc_plan(d.params(), length, eps, delta);
    let p = PiecewiseInterpolant::build(d, a, b, plan.cells)?;
    let base = p.integral();
    let mut estimates = Vec::with_capacity(plan.repetitions);
    for _ in 0..plan.repetitions {
        let mut acc = T::zero();
        for _ in 0..plan.samples {
            let x = (a + length * T::lit(rng.random::<f64>())).min(b);
            acc = acc + d.eval_counted(x, 0)? - p.eval(x);
        }
        estimates.push(base + length * acc / T::from_usize_lossy(plan.samples));
    }
    Ok(median_in_place(&mut estimates))
}
