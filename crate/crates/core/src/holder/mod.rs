//! Hölder-class densities on `[0, 1]` with query-counted information.
//!
//! A [`Density`] exposes values of `f` and its derivatives up to order `r`
//! through [`Density::eval_counted`], the only information channel solvers
//! use. Every call increments an atomic counter, so a solver's reported cost
//! can always be checked against the counter delta. The reference CDF is for
//! scoring and never touches the counter.

mod catalog;
mod reference;

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::Serialize;

pub use catalog::{builtin_catalog, builtin_catalog_with, CATALOG_NAMES};
pub(crate) use reference::invert_monotone;
pub use reference::ReferenceCdf;

use crate::error::{domain, Result};
use crate::scalar::Real;

/// Constants `(r, ρ, D, H, γ)` of the class `F^{r,ρ}(1)` (and `F̃` when `γ > 0`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HolderParams<T> {
    pub r: usize,
    pub rho: T,
    #[serde(rename = "D")]
    pub d: T,
    #[serde(rename = "H")]
    pub h: T,
    pub gamma: T,
}

impl<T: Real> HolderParams<T> {
    pub fn new(r: usize, rho: T, d: T, h: T, gamma: T) -> Result<Self> {
        let p = Self {
            r,
            rho,
            d,
            h,
            gamma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > T::zero() && self.rho <= T::one()) {
            return Err(domain(format!("rho must lie in (0, 1], got {}", self.rho)));
        }
        if !(self.d > T::zero()) || !(self.h > T::zero()) {
            return Err(domain("D and H must be positive"));
        }
        if !(self.gamma >= T::zero()) || self.gamma > self.d {
            return Err(domain(format!(
                "gamma must lie in [0, D], got gamma={} D={}",
                self.gamma, self.d
            )));
        }
        Ok(())
    }

    /// Total smoothness `r + ρ`.
    pub fn smoothness(&self) -> T {
        T::from_usize_lossy(self.r) + self.rho
    }

    /// `max{2, D}`: residual-criterion error multiplier.
    pub fn residual_factor(&self) -> T {
        self.d.max(T::lit(2.0))
    }

    /// `max{1, 2/γ}`: absolute-criterion error multiplier on `F̃`.
    pub fn absolute_factor(&self) -> Result<T> {
        if self.gamma <= T::zero() {
            return Err(domain("absolute criterion needs gamma > 0"));
        }
        Ok((T::lit(2.0) / self.gamma).max(T::one()))
    }
}

/// Pointwise values of a density and its derivatives.
pub trait DensityFn<T>: Send + Sync {
    /// `f^{(j)}(x)` for `x ∈ [0, 1]` and `j` up to the declared order.
    fn derivative(&self, x: T, j: usize) -> T;
}

impl<T, F> DensityFn<T> for F
where
    F: Fn(T, usize) -> T + Send + Sync,
{
    fn derivative(&self, x: T, j: usize) -> T {
        self(x, j)
    }
}

/// An evaluable density with counted oracle access.
///
/// Cloning shares the query counter; use [`Density::fork`] for an
/// independent counter over the same function.
#[derive(Clone)]
pub struct Density<T> {
    name: String,
    params: HolderParams<T>,
    func: Arc<dyn DensityFn<T>>,
    reference: Arc<ReferenceCdf<T>>,
    counter: Arc<AtomicU64>,
}

impl<T: Real> fmt::Debug for Density<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("queries", &self.queries())
            .finish()
    }
}

impl<T: Real> Density<T> {
    /// Wraps `func`; the reference CDF is tabulated here, once, with cells
    /// split at `breakpoints` (points where `f` is only finitely smooth).
    pub fn new(
        name: impl Into<String>,
        params: HolderParams<T>,
        func: impl DensityFn<T> + 'static,
        breakpoints: &[T],
    ) -> Result<Self> {
        params.validate()?;
        let func: Arc<dyn DensityFn<T>> = Arc::new(func);
        let reference = {
            let g = |x: T| func.derivative(x, 0);
            ReferenceCdf::tabulate(&g, breakpoints)
        };
        Ok(Self {
            name: name.into(),
            params,
            func,
            reference: Arc::new(reference),
            counter: Arc::new(AtomicU64::new(0)),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &HolderParams<T> {
        &self.params
    }

    /// Same density and reference table, fresh counter.
    pub fn fork(&self) -> Self {
        Self {
            counter: Arc::new(AtomicU64::new(0)),
            ..self.clone()
        }
    }

    /// Re-labels the class constants (e.g. to test membership under tighter bounds).
    pub fn with_params(&self, params: HolderParams<T>) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            counter: Arc::new(AtomicU64::new(0)),
            ..self.clone()
        })
    }

    /// Returns `f^{(j)}(x)` and charges one query.
    pub fn eval_counted(&self, x: T, j: usize) -> Result<T> {
        if !(x >= T::zero() && x <= T::one()) {
            return Err(domain(format!("x = {x} outside [0, 1]")));
        }
        if j > self.params.r {
            return Err(domain(format!(
                "derivative order {j} exceeds r = {}",
                self.params.r
            )));
        }
        self.counter.fetch_add(1, Ordering::Relaxed);
        Ok(self.func.derivative(x, j))
    }

    /// Uncounted evaluation, reserved for simulators and scoring.
    pub(crate) fn eval_uncounted(&self, x: T, j: usize) -> T {
        self.func.derivative(x, j)
    }

    /// Adds `k` queries performed outside [`Density::eval_counted`]
    /// (quantum query applications in the simulator).
    pub(crate) fn charge(&self, k: u64) {
        self.counter.fetch_add(k, Ordering::Relaxed);
    }

    pub fn queries(&self) -> u64 {
        self.counter.load(Ordering::Relaxed)
    }

    /// Reference `F(x) = ∫₀ˣ f` (scoring only, uncounted).
    pub fn reference_cdf(&self, x: T) -> T {
        let g = |t: T| self.func.derivative(t, 0);
        self.reference.eval(&g, x)
    }

    pub fn reference_mass(&self) -> T {
        self.reference.total_mass()
    }

    /// Reference quantile `F⁻¹(α)` by bisection on the reference CDF.
    pub fn reference_quantile(&self, alpha: T) -> T {
        invert_monotone(|x| self.reference_cdf(x), alpha)
    }

    pub fn reference_median(&self) -> T {
        self.reference_quantile(T::lit(0.5))
    }
}

/// Outcome of [`verify_membership`]; failures are reported, never raised.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MembershipReport<T> {
    pub is_density: bool,
    pub is_holder: bool,
    pub is_separated: bool,
    pub max_violation: T,
}

impl<T> MembershipReport<T> {
    pub fn passes(&self) -> bool {
        self.is_density && self.is_holder && self.is_separated
    }
}

pub const DEFAULT_GRID: usize = 4096;
pub const DEFAULT_TOL: f64 = 1e-8;

/// Grid check of the class constraints.
///
/// Derivative bounds and the Hölder quotient of `f^{(r)}` are tested on
/// `grid_n` equispaced points (all pairs for the quotient); the mass uses the
/// reference CDF; separation checks `f ≥ γ − tol`.
pub fn verify_membership<T: Real>(d: &Density<T>, grid_n: usize, tol: T) -> MembershipReport<T> {
    assert!(grid_n >= 2, "grid_n must be at least 2");
    let p = d.params;
    let grid: Vec<T> = (0..grid_n)
        .map(|k| T::from_usize_lossy(k) / T::from_usize_lossy(grid_n - 1))
        .collect();
    let mut worst = T::zero();

    let mut holder_ok = true;
    for j in 0..=p.r {
        for &x in &grid {
            let excess = d.eval_uncounted(x, j).abs() - p.d;
            if excess > tol {
                holder_ok = false;
            }
            worst = worst.max(excess);
        }
    }
    let top: Vec<T> = grid.iter().map(|&x| d.eval_uncounted(x, p.r)).collect();
    for a in 0..grid_n {
        for b in (a + 1)..grid_n {
            let gap = (grid[b] - grid[a]).powf(p.rho);
            let diff = (top[b] - top[a]).abs();
            if diff > (p.h + tol) * gap {
                holder_ok = false;
                worst = worst.max(diff / gap - p.h);
            }
        }
    }

    let mut min_f = T::infinity();
    for &x in &grid {
        min_f = min_f.min(d.eval_uncounted(x, 0));
    }
    let mass_err = (d.reference_mass() - T::one()).abs();
    let is_density = mass_err <= tol && min_f >= -tol;
    if !is_density {
        worst = worst.max(mass_err).max(-min_f);
    }
    let is_separated = min_f >= p.gamma - tol;
    if !is_separated {
        worst = worst.max(p.gamma - min_f);
    }
    MembershipReport {
        is_density,
        is_holder: holder_ok,
        is_separated,
        max_violation: worst.max(T::zero()),
    }
}
