//! Hard instances: `f = 1 + Σ x_i h_i − Σ x_i g_i` with disjoint bumps.
//!
//! `h_i` sit in `[0, 1/4]`, `g_i` in `[3/4, 1]`; every bump has mass
//! `ε₁^{1+1/(r+ρ)}` and peak `c·ε₁`. The median then satisfies
//! `Σ x_i = (1/2 − ξ)/ε₁^{1+1/(r+ρ)}`, so a median solver doubles as a mean
//! estimator for `x`. The probe here can only expose solvers that are too
//! cheap; it certifies no lower bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::holder::{Density, HolderParams};
use crate::median::median_bisection;
use crate::scalar::{factorial, Real};
use crate::setting::{Criterion, Setting};

/// Lower bound of every adversarial density.
pub const ADVERSARY_GAMMA: f64 = 2.0 / 3.0;

/// Polynomial bump profile `ψ(t) = t^{r+1}(1 − t)^{r+1}` on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct BumpProfile<T> {
    /// Monomial coefficients of `ψ^{(j)}` for `j = 0..=r+1`.
    derivatives: Vec<Vec<T>>,
    /// Upper bounds on `max |ψ^{(j)}|`.
    pub sup: Vec<T>,
    /// `∫ψ = ((r+1)!)² / (2r+3)!`.
    pub mass: T,
    pub peak: T,
}

impl<T: Real> BumpProfile<T> {
    pub fn new(r: usize) -> Self {
        let m = r + 1;
        // (t(1 − t))^m expanded
        let mut base = vec![T::one()];
        for _ in 0..m {
            let mut next = vec![T::zero(); base.len() + 2];
            for (k, &b) in base.iter().enumerate() {
                next[k + 1] = next[k + 1] + b;
                next[k + 2] = next[k + 2] - b;
            }
            base = next;
        }
        let mut derivatives = vec![base];
        for _ in 0..=r {
            let last = derivatives.last().expect("nonempty");
            let d: Vec<T> = last
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &v)| v * T::from_usize_lossy(k))
                .collect();
            derivatives.push(if d.is_empty() { vec![T::zero()] } else { d });
        }
        let grid = 20_000;
        let sup = derivatives
            .iter()
            .map(|c| {
                let mut best = T::zero();
                for g in 0..=grid {
                    let t = T::from_usize_lossy(g) / T::from_usize_lossy(grid);
                    best = best.max(poly(c, t).abs());
                }
                best * T::lit(1.001)
            })
            .collect();
        let mass = factorial::<T>(m) * factorial::<T>(m) / factorial::<T>(2 * r + 3);
        let peak = T::lit(0.25).powi(m as i32);
        Self {
            derivatives,
            sup,
            mass,
            peak,
        }
    }

    /// `ψ^{(j)}(t)`, zero outside `[0, 1]`.
    pub fn eval(&self, t: T, j: usize) -> T {
        if t < T::zero() || t > T::one() {
            return T::zero();
        }
        poly(&self.derivatives[j], t)
    }

    /// Hölder-`ρ` constant of `ψ^{(r)}` extended by zero.
    ///
    /// For gaps `≤ 1` it is bounded by the Lipschitz constant, beyond that by
    /// twice the sup.
    pub fn holder_constant(&self, r: usize, rho: T) -> T {
        let lip = self.sup[r + 1];
        if rho >= T::one() {
            lip
        } else {
            lip.max(T::lit(2.0) * self.sup[r])
        }
    }
}

fn poly<T: Real>(c: &[T], t: T) -> T {
    c.iter().rev().fold(T::zero(), |acc, &v| acc * t + v)
}

/// The disjoint-support bump family at scale `ε₁`.
#[derive(Clone, Debug, Serialize)]
pub struct BumpFamily<T> {
    pub eps1: T,
    pub r: usize,
    pub rho: T,
    /// Bump count `⌊c_n ε₁^{-1/(r+ρ)}⌋`.
    pub n: usize,
    pub c_n: T,
    /// Support width `κ ε₁^{1/(r+ρ)}`.
    pub width: T,
    pub kappa: T,
    /// Peak height `c·ε₁`.
    pub amp: T,
    pub c: T,
    /// Mass of each bump, `ε₁^{1+1/(r+ρ)}`.
    pub bump_mass: T,
    /// Hölder constant of `f^{(r)}` for any weights in `[0, 1]`.
    pub holder_quotient: T,
    pub supports_h: Vec<(T, T)>,
    pub supports_g: Vec<(T, T)>,
    #[serde(skip)]
    profile: BumpProfile<T>,
    #[serde(skip)]
    params: HolderParams<T>,
}

impl<T: Real> BumpFamily<T> {
    /// Narrowest admissible supports for the class `params`.
    ///
    /// `κ` is the smallest scale meeting `|f^{(j)}| ≤ D`, the Hölder bound `H`
    /// on `f^{(r)}` (with factor `2^{1−ρ}` for pairs straddling two bumps) and
    /// peak `≤ 1/3`.
    pub fn new(eps1: T, params: &HolderParams<T>) -> Result<Self> {
        if !(eps1 > T::zero() && eps1 < T::one()) {
            return Err(domain(format!("eps1 = {eps1} outside (0, 1)")));
        }
        let r = params.r;
        let rho = params.rho;
        let s = params.smoothness();
        let profile = BumpProfile::<T>::new(r);
        let beta = profile.mass;
        let k_rho = profile.holder_constant(r, rho);
        let straddle = T::lit(2.0).powf(T::one() - rho);

        let mut kappa = (straddle * k_rho / (beta * params.h)).powf(T::one() / (s + T::one()));
        // peak: ψmax ε₁ / (κβ) ≤ min(1/3, D − 1)
        let peak_cap = T::lit(1.0 / 3.0).min(params.d - T::one());
        if peak_cap <= T::zero() {
            return Err(Error::Precondition(
                "D must exceed 1 to host the bumps".into(),
            ));
        }
        kappa = kappa.max(profile.peak * eps1 / (beta * peak_cap));
        for j in 1..=r {
            let jf = T::from_usize_lossy(j);
            let need = (eps1.powf(T::one() - jf / s) * profile.sup[j] / (beta * params.d))
                .powf(T::one() / (T::one() + jf));
            kappa = kappa.max(need);
        }

        let width = kappa * eps1.powf(T::one() / s);
        let c_n = T::one() / (T::lit(4.0) * kappa);
        let n = (T::lit(0.25) / width).floor().to_usize().unwrap_or(0);
        if n == 0 {
            return Err(Error::Precondition(format!(
                "eps1 = {eps1} too large: bump width {width} exceeds 1/4"
            )));
        }
        let c = profile.peak / (kappa * beta);
        let amp = c * eps1;
        let bump_mass = eps1.powf(T::one() + T::one() / s);
        let holder_quotient = straddle * amp / profile.peak * k_rho / width.powf(s);
        let three_q = T::lit(0.75);
        let supports_h = (0..n)
            .map(|i| {
                let lo = width * T::from_usize_lossy(i);
                (lo, lo + width)
            })
            .collect();
        let supports_g = (0..n)
            .map(|i| {
                let lo = three_q + width * T::from_usize_lossy(i);
                (lo, lo + width)
            })
            .collect();
        let mut adv_params = *params;
        adv_params.gamma = T::lit(ADVERSARY_GAMMA);
        adv_params.validate()?;
        Ok(Self {
            eps1,
            r,
            rho,
            n,
            c_n,
            width,
            kappa,
            amp,
            c,
            bump_mass,
            holder_quotient,
            supports_h,
            supports_g,
            profile,
            params: adv_params,
        })
    }

    /// Class constants of the induced densities (`γ = 2/3`).
    pub fn params(&self) -> &HolderParams<T> {
        &self.params
    }
}

/// `f_{ε₁} = 1 + Σ x_i h_i − Σ x_i g_i` with analytic derivatives.
pub fn make_adversarial_density<T: Real>(fam: &BumpFamily<T>, x: &[T]) -> Result<Density<T>> {
    if x.len() != fam.n {
        return Err(domain(format!(
            "expected {} weights, got {}",
            fam.n,
            x.len()
        )));
    }
    if let Some(bad) = x.iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
        return Err(domain(format!("weight {bad} outside [0, 1]")));
    }
    let weights = x.to_vec();
    let profile = fam.profile.clone();
    let width = fam.width;
    let n = fam.n;
    let scale = fam.amp / profile.peak;
    let g_start = T::lit(0.75);
    let end_h = width * T::from_usize_lossy(n);
    let f = move |t: T, j: usize| -> T {
        let bump = |offset: T| -> Option<T> {
            let rel = (t - offset) / width;
            let i = rel.floor().to_usize()?;
            if i >= n {
                // right end of the last support
                return if rel == T::from_usize_lossy(n) {
                    Some(weights[n - 1] * profile.eval(T::one(), j))
                } else {
                    None
                };
            }
            let u = rel - T::from_usize_lossy(i);
            Some(weights[i] * profile.eval(u, j))
        };
        let mut v = T::zero();
        if t >= T::zero() && t <= end_h {
            v = v + bump(T::zero()).unwrap_or(T::zero());
        }
        if t >= g_start && t <= g_start + end_h {
            v = v - bump(g_start).unwrap_or(T::zero());
        }
        let v = v * scale / width.powi(j as i32);
        if j == 0 {
            T::one() + v
        } else {
            v
        }
    };
    let mut breaks: Vec<T> = Vec::with_capacity(2 * n + 2);
    for i in 0..=n {
        let e = width * T::from_usize_lossy(i);
        breaks.push(e);
        breaks.push(g_start + e);
    }
    Density::new(format!("adversary-{}", fam.eps1), fam.params, f, &breaks)
}

/// `|Σ x_i − (1/2 − ξ)/ε₁^{1+1/(r+ρ)}|`.
pub fn check_median_identity<T: Real>(fam: &BumpFamily<T>, x: &[T], xi_ref: T) -> T {
    let sum = x.iter().fold(T::zero(), |a, &b| a + b);
    (sum - (T::lit(0.5) - xi_ref) / fam.bump_mass).abs()
}

/// `ε₁` tying the bump scale to the solver precision in each setting:
/// `ε`, `ε^{(r+ρ)/(r+ρ+1/2)}`, `ε^{(r+ρ)/(r+ρ+1)}`.
pub fn probe_scale<T: Real>(setting: Setting, eps: T, params: &HolderParams<T>) -> T {
    let s = params.smoothness();
    match setting {
        Setting::Deterministic => eps,
        Setting::Randomized => eps.powf(s / (s + T::lit(0.5))),
        Setting::Quantum => eps.powf(s / (s + T::one())),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeTrial<T> {
    pub ones: usize,
    pub xi_hat: T,
    pub queries: u64,
    /// `|mean(x) − (1/2 − ξ̂)/(n ε₁^{1+1/(r+ρ)})|`.
    pub mean_recovery_error: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport<T> {
    pub setting: Setting,
    pub eps: T,
    pub eps1: T,
    pub n: usize,
    pub trials: Vec<ProbeTrial<T>>,
    pub mean_queries: f64,
}

/// Runs the setting's median solver on random `x ∈ {0,1}^n` instances.
pub fn hardness_probe<T: Real>(
    setting: Setting,
    eps: T,
    trials: usize,
    params: &HolderParams<T>,
    rng: &mut ChaCha8Rng,
) -> Result<ProbeReport<T>> {
    if trials == 0 {
        return Err(domain("trials must be at least 1"));
    }
    let eps1 = probe_scale(setting, eps, params);
    let fam = BumpFamily::new(eps1, params)?;
    let mut out = Vec::with_capacity(trials);
    for _ in 0..trials {
        let x: Vec<T> = (0..fam.n)
            .map(|_| {
                if rng.random::<bool>() {
                    T::one()
                } else {
                    T::zero()
                }
            })
            .collect();
        let d = make_adversarial_density(&fam, &x)?;
        let mut solver_rng = ChaCha8Rng::from_rng(&mut *rng);
        let res = median_bisection(&d, eps, setting, Criterion::Residual, &mut solver_rng)?;
        let n = T::from_usize_lossy(fam.n);
        let mean = x.iter().fold(T::zero(), |a, &b| a + b) / n;
        let err = (mean - (T::lit(0.5) - res.xi_hat) / (n * fam.bump_mass)).abs();
        out.push(ProbeTrial {
            ones: x.iter().filter(|v| **v > T::zero()).count(),
            xi_hat: res.xi_hat,
            queries: res.trace.total_queries,
            mean_recovery_error: err,
        });
    }
    let mean_queries = out.iter().map(|t| t.queries as f64).sum::<f64>() / trials as f64;
    Ok(ProbeReport {
        setting,
        eps,
        eps1,
        n: fam.n,
        trials: out,
        mean_queries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holder::verify_membership;

    fn class(r: usize, rho: f64) -> HolderParams<f64> {
        HolderParams::new(r, rho, 2.0, 100.0, 0.5).unwrap()
    }

    #[test]
    fn profile_mass_and_peak() {
        for r in 0..4 {
            let p = BumpProfile::<f64>::new(r);
            let gl = crate::quadrature::GaussRule::<f64>::new(20);
            let m = gl.integrate(0.0, 1.0, |t| p.eval(t, 0));
            assert!((m - p.mass).abs() < 1e-15);
            assert!((p.eval(0.5, 0) - p.peak).abs() < 1e-15);
            // derivatives up to order r vanish at both ends
            for j in 0..=r {
                assert!(
                    p.eval(0.0, j).abs() < 1e-14 && p.eval(1.0, j).abs() < 1e-12,
                    "r={r} j={j}"
                );
            }
        }
    }

    #[test]
    fn family_invariants() {
        for (r, rho) in [(0usize, 1.0), (1, 1.0), (1, 0.5), (2, 1.0)] {
            for eps1 in [2f64.powi(-4), 2f64.powi(-6), 2f64.powi(-9)] {
                let p = class(r, rho);
                let Ok(fam) = BumpFamily::new(eps1, &p) else {
                    continue;
                };
                let s = r as f64 + rho;
                assert!((fam.bump_mass - eps1.powf(1.0 + 1.0 / s)).abs() < 1e-15);
                assert!((fam.amp - fam.c * eps1).abs() < 1e-15);
                assert!(fam.amp <= 1.0 / 3.0 + 1e-15);
                assert!(fam.holder_quotient <= p.h * (1.0 + 1e-12));
                let transfer = fam.c * eps1 / fam.width.powf(s)
                    * BumpProfile::<f64>::new(r).holder_constant(r, rho)
                    / BumpProfile::<f64>::new(r).peak
                    * 2f64.powf(1.0 - rho);
                assert!((fam.holder_quotient - transfer).abs() <= 1e-9 * transfer);
                let (_, last_h) = *fam.supports_h.last().unwrap();
                let (_, last_g) = *fam.supports_g.last().unwrap();
                assert!(last_h <= 0.25 + 1e-15 && last_g <= 1.0 + 1e-15);
                assert!(fam.supports_g[0].0 >= 0.75);
                for w in fam.supports_h.windows(2) {
                    assert!(w[0].1 <= w[1].0 + 1e-15);
                }
            }
        }
    }

    #[test]
    fn zero_weights_give_uniform() {
        let fam = BumpFamily::new(2f64.powi(-6), &class(1, 1.0)).unwrap();
        let d = make_adversarial_density(&fam, &vec![0.0; fam.n]).unwrap();
        for k in 0..=10 {
            assert_eq!(d.eval_counted(k as f64 / 10.0, 0).unwrap(), 1.0);
        }
        assert!((d.reference_median() - 0.5).abs() < 1e-15);
        assert!(check_median_identity(&fam, &vec![0.0; fam.n], d.reference_median()) < 1e-9);
    }

    #[test]
    fn all_ones_shift_the_median() {
        let fam = BumpFamily::new(2f64.powi(-6), &class(1, 1.0)).unwrap();
        let x = vec![1.0; fam.n];
        let d = make_adversarial_density(&fam, &x).unwrap();
        let xi = d.reference_median();
        let expect = 0.5 - fam.n as f64 * fam.bump_mass;
        assert!((xi - expect).abs() < 1e-13);
        assert!(check_median_identity(&fam, &x, xi) <= 1e-7);
        assert!((d.reference_mass() - 1.0).abs() < 1e-12);
        assert!(verify_membership(&d, 2048, 1e-8).passes());
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = class(1, 1.0);
        assert!(matches!(
            BumpFamily::new(0.9, &p),
            Err(Error::Precondition(_))
        ));
        let fam = BumpFamily::new(2f64.powi(-8), &p).unwrap();
        assert!(make_adversarial_density(&fam, &vec![1.5; fam.n]).is_err());
        assert!(make_adversarial_density(&fam, &[0.0]).is_err() || fam.n == 1);
    }

    #[test]
    fn deterministic_probe_is_reproducible() {
        let p = class(0, 1.0);
        let a = hardness_probe(
            Setting::Deterministic,
            2f64.powi(-7),
            1,
            &p,
            &mut ChaCha8Rng::seed_from_u64(3),
        )
        .unwrap();
        let b = hardness_probe(
            Setting::Deterministic,
            2f64.powi(-7),
            1,
            &p,
            &mut ChaCha8Rng::seed_from_u64(3),
        )
        .unwrap();
        assert_eq!(a.trials[0].xi_hat.to_bits(), b.trials[0].xi_hat.to_bits());
        assert_eq!(a.trials[0].queries, b.trials[0].queries);
    }
}
