//! Quantile vectors by repeated perturbed bisection or by the inverse-CDF
//! initial-value problem.
//!
//! The inverse `z = F⁻¹` solves the autonomous problem `z′(y) = 1/f(z(y))`,
//! `z(0) = 0`. It is marched with a fixed-step Taylor method whose
//! coefficients come from the reciprocal power series of `f` composed with
//! the local solution, so each step needs `f, f′, …, f^{(r)}` at one point.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::holder::{Density, HolderParams};
use crate::median::{delta_budget, perturbed_bisection, BisectionOptions};
use crate::scalar::{factorial, Real};
use crate::setting::Setting;

/// Quantile levels, sorted on construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantileRequest<T> {
    pub alpha: Vec<T>,
    pub eps: T,
    pub setting: Setting,
}

impl<T: Real> QuantileRequest<T> {
    pub fn new(mut alpha: Vec<T>, eps: T, setting: Setting) -> Result<Self> {
        if alpha.is_empty() {
            return Err(domain("at least one quantile level is required"));
        }
        if let Some(bad) = alpha
            .iter()
            .find(|a| !(**a >= T::zero() && **a <= T::one()))
        {
            return Err(domain(format!("quantile level {bad} outside [0, 1]")));
        }
        if !(eps > T::zero() && eps < T::lit(0.5)) {
            return Err(domain(format!("eps = {eps} outside (0, 1/2)")));
        }
        alpha.sort_by(|a, b| a.partial_cmp(b).expect("finite levels"));
        Ok(Self {
            alpha,
            eps,
            setting,
        })
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuantileEstimate<T> {
    pub alpha: Vec<T>,
    pub xi_hat: Vec<T>,
    /// Queries charged per level (the IVP route reports its single shared cost
    /// on the first entry and zero elsewhere).
    pub queries: Vec<u64>,
    pub total_queries: u64,
}

fn require_separated<T: Real>(params: &HolderParams<T>) -> Result<()> {
    if params.gamma <= T::zero() {
        return Err(domain(
            "quantile routes need a density bounded below (gamma > 0)",
        ));
    }
    Ok(())
}

/// Runs perturbed bisection once per level with target `α_j`.
///
/// Failure budgets are divided by `k` so the whole vector holds with the
/// single-median confidence. Levels 0 and 1 map to 0 and 1 without queries.
pub fn quantiles_bisect<T: Real>(
    d: &Density<T>,
    req: &QuantileRequest<T>,
    rng: &mut ChaCha8Rng,
) -> Result<QuantileEstimate<T>> {
    require_separated(d.params())?;
    let k = T::from_usize_lossy(req.k());
    let delta = delta_budget(req.setting, req.eps)?.map(|dl| dl / k);
    let mut xi_hat = Vec::with_capacity(req.k());
    let mut queries = Vec::with_capacity(req.k());
    for &alpha in &req.alpha {
        let mut stream = ChaCha8Rng::from_rng(&mut *rng);
        if alpha <= T::zero() || alpha >= T::one() {
            xi_hat.push(alpha);
            queries.push(0);
            continue;
        }
        let (x, trace) = perturbed_bisection(
            d,
            alpha,
            req.eps,
            req.setting,
            delta,
            BisectionOptions::default(),
            &mut stream,
        )?;
        xi_hat.push(x);
        queries.push(trace.total_queries);
    }
    let tol = T::lit(2.0) * d.params().absolute_factor()? * req.eps;
    enforce_monotone(&mut xi_hat, tol)?;
    Ok(QuantileEstimate {
        alpha: req.alpha.clone(),
        total_queries: queries.iter().sum(),
        xi_hat,
        queries,
    })
}

/// Clips to a nondecreasing vector; a drop larger than `tol` is an error.
fn enforce_monotone<T: Real>(xi: &mut [T], tol: T) -> Result<()> {
    for j in 1..xi.len() {
        if xi[j] < xi[j - 1] {
            if xi[j - 1] - xi[j] > tol {
                return Err(Error::InternalInvariant(format!(
                    "quantile estimates decrease by {} at index {j}",
                    xi[j - 1] - xi[j]
                )));
            }
            xi[j] = xi[j - 1];
        }
    }
    Ok(())
}

/// Numerical inverse CDF: one Taylor polynomial per step.
#[derive(Clone, Debug)]
pub struct InverseCdfSolution<T> {
    step: T,
    /// Taylor coefficients in the local offset `y − y_n`, per step.
    coeffs: Vec<Vec<T>>,
    pub queries: u64,
}

impl<T: Real> InverseCdfSolution<T> {
    pub fn steps(&self) -> usize {
        self.coeffs.len()
    }

    /// Continuous extension `z(y)`, clipped to `[0, 1]`.
    pub fn eval(&self, y: T) -> T {
        let y = y.max(T::zero()).min(T::one());
        let n = self.coeffs.len();
        let idx = (y / self.step).floor().to_usize().unwrap_or(0).min(n - 1);
        let t = y - self.step * T::from_usize_lossy(idx);
        let c = &self.coeffs[idx];
        let v = c.iter().rev().fold(T::zero(), |acc, &ck| acc * t + ck);
        v.max(T::zero()).min(T::one())
    }
}

/// Taylor coefficients `c_0..=c_{r+1}` of the local solution through `z0`,
/// given `f^{(j)}(z0)` for `j = 0..=r`.
fn taylor_coefficients<T: Real>(z0: T, derivs: &[T]) -> Vec<T> {
    let r = derivs.len() - 1;
    // f(z0 + w) = Σ a_j w^j
    let a: Vec<T> = derivs
        .iter()
        .enumerate()
        .map(|(j, &v)| v / factorial::<T>(j))
        .collect();
    let mut c = vec![T::zero(); r + 2];
    c[0] = z0;
    let mut comp = vec![T::zero(); r + 1]; // series of f∘z
    let mut recip = vec![T::zero(); r + 1]; // series of 1/(f∘z)
    comp[0] = a[0];
    recip[0] = T::one() / a[0];
    c[1] = recip[0];
    for k in 1..=r {
        // [t^k] of Σ_{j≥1} a_j w^j with w = Σ_{i≥1} c_i t^i
        let mut w_pow = vec![T::zero(); k + 1];
        w_pow[1..=k].copy_from_slice(&c[1..=k]);
        let mut fk = a[1] * w_pow[k];
        for aj in a.iter().take(k + 1).skip(2) {
            w_pow = series_mul(&w_pow, &c[..=k], k);
            fk = fk + *aj * w_pow[k];
        }
        comp[k] = fk;
        let mut s = T::zero();
        for i in 1..=k {
            s = s + comp[i] * recip[k - i];
        }
        recip[k] = -s / comp[0];
        c[k + 1] = recip[k] / T::from_usize_lossy(k + 1);
    }
    c
}

/// Product of `p` with `w = Σ_{i≥1} c_i t^i`, truncated at degree `deg`.
fn series_mul<T: Real>(p: &[T], c: &[T], deg: usize) -> Vec<T> {
    let mut out = vec![T::zero(); deg + 1];
    for (i, &pi) in p.iter().enumerate() {
        if pi == T::zero() {
            continue;
        }
        for (j, &cj) in c.iter().enumerate().skip(1) {
            if i + j > deg {
                break;
            }
            out[i + j] = out[i + j] + pi * cj;
        }
    }
    out
}

/// Marches `z′ = 1/f(z)` over `[0, 1]` with `steps` equal steps.
pub fn solve_inverse_cdf<T: Real>(d: &Density<T>, steps: usize) -> Result<InverseCdfSolution<T>> {
    require_separated(d.params())?;
    if steps == 0 {
        return Err(domain("step count must be positive"));
    }
    let r = d.params().r;
    let h = T::one() / T::from_usize_lossy(steps);
    let before = d.queries();
    let mut z = T::zero();
    let mut coeffs = Vec::with_capacity(steps);
    let mut derivs = vec![T::zero(); r + 1];
    for _ in 0..steps {
        let at = z.max(T::zero()).min(T::one());
        for (j, slot) in derivs.iter_mut().enumerate() {
            *slot = d.eval_counted(at, j)?;
        }
        if derivs[0] <= T::zero() {
            return Err(Error::InternalInvariant(format!(
                "density vanishes at {at}"
            )));
        }
        let c = taylor_coefficients(at, &derivs);
        z = c.iter().rev().fold(T::zero(), |acc, &ck| acc * h + ck);
        coeffs.push(c);
    }
    Ok(InverseCdfSolution {
        step: h,
        coeffs,
        queries: d.queries() - before,
    })
}

/// Bound `C` in `|z_h − F⁻¹| ≤ C h^{r+ρ}`.
///
/// Local error is `≤ H_z h^{r+1+ρ}/(r+1)!` with `H_z` bounding the Hölder
/// constant of `z^{(r+1)}`, taken from the majorant series of
/// `1/(γ − Σ M_j w^j/j!)` (`M_j = D` for `j ≤ r`, `M_{r+1} = max{D, H}`).
/// In one dimension a perturbation is transported by `f(z₀)/f(z(y)) ≤ D/γ`.
pub fn ivp_error_constant<T: Real>(params: &HolderParams<T>) -> T {
    let r = params.r;
    let order = r + 2;
    let mut m = vec![params.d; order + 1];
    m[r + 1] = params.d.max(params.h);
    // majorant of f around z0 minus its constant term: Σ_{j≥1} M_j/j! w^j
    let g: Vec<T> = (0..=order)
        .map(|j| {
            if j == 0 {
                T::zero()
            } else {
                m[j] / factorial::<T>(j)
            }
        })
        .collect();
    // B = 1/(γ − g)
    let mut b = vec![T::zero(); order + 1];
    b[0] = T::one() / params.gamma;
    for k in 1..=order {
        let s = (1..=k).fold(T::zero(), |acc, i| acc + g[i] * b[k - i]);
        b[k] = s / params.gamma;
    }
    // Z' = B(Z), Z(0) = 0
    let mut zc = vec![T::zero(); order + 1];
    zc[1] = b[0];
    for k in 1..order {
        // [t^k] B(Z(t))
        let mut pow = vec![T::zero(); order + 1];
        pow[0] = T::one();
        let mut acc = T::zero();
        for bj in b.iter().take(k + 1).skip(1) {
            pow = series_mul(&pow, &zc, order);
            acc = acc + *bj * pow[k];
        }
        zc[k + 1] = acc / T::from_usize_lossy(k + 1);
    }
    let hz = zc[r + 2] * factorial::<T>(r + 2);
    (params.d / params.gamma) * hz / factorial::<T>(r + 1)
}

/// Steps so that `ivp_error_constant · h^{r+ρ} ≤ eps`.
pub fn ivp_steps<T: Real>(params: &HolderParams<T>, eps: T) -> usize {
    let c = ivp_error_constant(params);
    let s = params.smoothness();
    (c / eps)
        .powf(T::one() / s)
        .ceil()
        .to_usize()
        .unwrap_or(1)
        .max(1)
}

/// Deterministic quantile vector through the inverse-CDF IVP.
///
/// Cost `(r + 1)·⌈(C/ε)^{1/(r+ρ)}⌉` queries, independent of `k`.
pub fn quantiles_ivp_det<T: Real>(
    d: &Density<T>,
    req: &QuantileRequest<T>,
) -> Result<QuantileEstimate<T>> {
    require_separated(d.params())?;
    if req.setting != Setting::Deterministic {
        return Err(domain("the IVP route is deterministic only"));
    }
    let steps = ivp_steps(d.params(), req.eps);
    let sol = solve_inverse_cdf(d, steps)?;
    let mut xi_hat: Vec<T> = req
        .alpha
        .iter()
        .map(|&a| {
            if a <= T::zero() || a >= T::one() {
                a
            } else {
                sol.eval(a)
            }
        })
        .collect();
    enforce_monotone(&mut xi_hat, req.eps)?;
    let mut queries = vec![0; req.k()];
    queries[0] = sol.queries;
    Ok(QuantileEstimate {
        alpha: req.alpha.clone(),
        xi_hat,
        queries,
        total_queries: sol.queries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holder::{builtin_catalog, builtin_catalog_with};

    #[test]
    fn request_sorts_and_validates() {
        let r = QuantileRequest::new(vec![0.9, 0.1, 0.5], 0.01, Setting::Deterministic).unwrap();
        assert_eq!(r.alpha, vec![0.1, 0.5, 0.9]);
        assert!(QuantileRequest::<f64>::new(vec![], 0.01, Setting::Deterministic).is_err());
        assert!(QuantileRequest::new(vec![1.2], 0.01, Setting::Deterministic).is_err());
        assert!(QuantileRequest::new(vec![0.2], 0.6, Setting::Deterministic).is_err());
    }

    #[test]
    fn uniform_bisect_and_degenerate_levels() {
        let d = builtin_catalog::<f64>("uniform").unwrap();
        let eps = 2f64.powi(-10);
        let req = QuantileRequest::new(vec![0.25, 0.5, 0.75], eps, Setting::Deterministic).unwrap();
        let out = quantiles_bisect(&d, &req, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for (x, a) in out.xi_hat.iter().zip(&req.alpha) {
            assert!((x - a).abs() <= eps);
        }
        let e = d.fork();
        let req = QuantileRequest::new(vec![0.0, 1.0], eps, Setting::Deterministic).unwrap();
        let out = quantiles_bisect(&e, &req, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(out.xi_hat, vec![0.0, 1.0]);
        assert_eq!(e.queries(), 0);
        assert_eq!(out.total_queries, 0);
    }

    #[test]
    fn uniform_ivp_is_identity() {
        let d = builtin_catalog::<f64>("uniform").unwrap();
        let sol = solve_inverse_cdf(&d, 7).unwrap();
        for k in 0..=20 {
            let y = k as f64 / 20.0;
            assert!((sol.eval(y) - y).abs() < 1e-14);
        }
        assert_eq!(sol.queries, 14);
    }

    #[test]
    fn taylor_coefficients_for_exponential_flow() {
        // f(z) = e^{-z} gives z' = e^{z}, z = -ln(1 - y): c_k = 1/k
        let derivs = [1.0, -1.0, 1.0, -1.0];
        let c = taylor_coefficients(0.0f64, &derivs);
        for (k, ck) in c.iter().enumerate().skip(1) {
            assert!((ck - 1.0 / k as f64).abs() < 1e-14, "k={k} c={ck}");
        }
    }

    #[test]
    fn ivp_needs_separation() {
        let d = builtin_catalog::<f64>("uniform").unwrap();
        let p = HolderParams::new(1, 1.0, 2.0, 10.0, 0.0).unwrap();
        let d0 = d.with_params(p).unwrap();
        let req = QuantileRequest::new(vec![0.5], 0.01, Setting::Deterministic).unwrap();
        assert!(quantiles_ivp_det(&d0, &req).is_err());
        let req = QuantileRequest::new(vec![0.5], 0.01, Setting::Quantum).unwrap();
        assert!(quantiles_ivp_det(&d, &req).is_err());
    }

    #[test]
    fn ivp_order_under_step_halving() {
        let d = builtin_catalog_with::<f64>("sine-0.5", 1, 1.0).unwrap();
        let target = d.reference_quantile(0.3);
        let err = |n| (solve_inverse_cdf(&d, n).unwrap().eval(0.3) - target).abs();
        for n in [40usize, 80, 160] {
            let ratio = err(n) / err(2 * n);
            assert!((3.2..=5.0).contains(&ratio), "n={n} ratio={ratio}");
        }
    }

    #[test]
    fn ivp_inverse_identity_on_dense_grid() {
        for name in ["sine-0.5", "poly-2", "kink-4"] {
            for r in 0..=2 {
                let d = builtin_catalog_with::<f64>(name, r, 1.0).unwrap();
                let eps = 2f64.powi(-10);
                let sol = solve_inverse_cdf(&d, ivp_steps(d.params(), eps)).unwrap();
                for k in 0..=200 {
                    let y = k as f64 / 200.0;
                    let back = d.reference_cdf(sol.eval(y));
                    assert!(
                        (back - y).abs() <= eps,
                        "{name} r={r} y={y} err={}",
                        (back - y).abs()
                    );
                }
            }
        }
    }

    #[test]
    fn monotone_clipping() {
        let mut v = vec![0.1, 0.3, 0.29, 0.5];
        enforce_monotone(&mut v, 0.05).unwrap();
        assert_eq!(v, vec![0.1, 0.3, 0.3, 0.5]);
        let mut w = vec![0.4, 0.2];
        assert!(enforce_monotone(&mut w, 0.05).is_err());
    }
}
