//! Perturbed bisection for the median (and any single quantile).
//!
//! Bisection on `G(x) = ∫₀ˣ f − α` where each `G(x_i)` is replaced by an
//! `eps`-accurate estimate `G_i` from the setting's integration oracle. The
//! run stops at the first `|G_i| ≤ eps` or after `⌈log₂(1/eps)⌉` steps and
//! returns the last midpoint. Whenever every oracle call is within `eps`,
//! either `|G(ξ̂)| ≤ 2 eps` or the final interval contains `ξ`, giving
//! residual error `≤ max{2, D}·eps` and, on `F̃`, absolute error
//! `≤ max{1, 2/γ}·eps`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::holder::Density;
use crate::integrate::{det_budget, integrate_det, integrate_mc};
use crate::quantum::{integrate_quantum, QuerySimState};
use crate::scalar::{ceil_log2_inv, Real};
use crate::setting::{Criterion, Setting};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ResidualSmall,
    MaxIters,
}

/// Record of one perturbed-bisection run.
#[derive(Clone, Debug, Serialize)]
pub struct BisectionTrace<T> {
    /// `(x_i, G_i)` per step.
    pub points: Vec<(T, T)>,
    /// Interval whose midpoint is `x_i`; each halves its predecessor.
    pub intervals: Vec<(T, T)>,
    /// Stopping index (1-based).
    pub i0: usize,
    pub i_max: usize,
    pub stop_reason: StopReason,
    pub total_queries: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MedianResult<T> {
    pub xi_hat: T,
    pub criterion: Criterion,
    pub eps: T,
    pub setting: Setting,
    /// Confidence budget per oracle call (`None` when deterministic).
    pub delta: Option<T>,
    /// Error bound for `criterion` (holds surely, or with the setting's probability).
    pub guarantee: T,
    /// `Some(eps)` when the run hit the step cap, where `|ξ̂ − ξ| ≤ eps` holds directly.
    pub interval_width_guarantee: Option<T>,
    pub trace: BisectionTrace<T>,
}

/// Per-call failure budget: none, `ε²/⌈log₂ ε⁻¹⌉`, or `1/(4⌈log₂ ε⁻¹⌉)`.
pub fn delta_budget<T: Real>(setting: Setting, eps: T) -> Result<Option<T>> {
    check_eps(eps)?;
    let steps = T::from_usize_lossy(ceil_log2_inv(eps));
    Ok(match setting {
        Setting::Deterministic => None,
        Setting::Randomized => Some(eps * eps / steps),
        Setting::Quantum => Some(T::one() / (T::lit(4.0) * steps)),
    })
}

fn check_eps<T: Real>(eps: T) -> Result<()> {
    if !(eps > T::zero() && eps < T::lit(0.5)) {
        return Err(domain(format!("eps = {eps} outside (0, 1/2)")));
    }
    Ok(())
}

/// Integration oracle for one setting at fixed `(eps, delta)`.
pub struct SettingOracle<T> {
    setting: Setting,
    eps: T,
    delta: Option<T>,
    rng: ChaCha8Rng,
    quantum: QuerySimState,
}

impl<T: Real> SettingOracle<T> {
    pub fn new(setting: Setting, eps: T, delta: Option<T>, rng: &mut ChaCha8Rng) -> Result<Self> {
        if setting != Setting::Deterministic {
            match delta {
                Some(d) if d > T::zero() && d < T::lit(0.5) => {}
                _ => {
                    return Err(domain(
                        "randomized and quantum oracles need delta in (0, 1/2)",
                    ))
                }
            }
        }
        let quantum = QuerySimState::from_rng(ChaCha8Rng::from_rng(&mut *rng));
        Ok(Self {
            setting,
            eps,
            delta,
            rng: ChaCha8Rng::from_rng(rng),
            quantum,
        })
    }

    pub fn quantum_queries(&self) -> u64 {
        self.quantum.queries_used
    }

    /// `∫_a^b f` to the oracle's precision.
    pub fn integral(&mut self, d: &Density<T>, a: T, b: T) -> Result<T> {
        match self.setting {
            Setting::Deterministic => {
                let n = det_budget(self.eps, d.params(), b - a);
                integrate_det(d, a, b, n)
            }
            Setting::Randomized => {
                let delta = self.delta.expect("checked in new");
                integrate_mc(d, a, b, self.eps, delta, &mut self.rng)
            }
            Setting::Quantum => {
                let delta = self.delta.expect("checked in new");
                integrate_quantum(d, a, b, self.eps, delta, &mut self.quantum)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BisectionOptions {
    /// Integrate only the span between consecutive midpoints, at accuracy
    /// `eps / i_max` per piece. Off by default so costs follow the fresh
    /// `∫₀^{x_i}` accounting.
    pub incremental: bool,
}

/// Perturbed bisection for `∫₀^ξ f = target`.
///
/// `delta` is the per-call failure budget (ignored when deterministic).
pub fn perturbed_bisection<T: Real>(
    d: &Density<T>,
    target: T,
    eps: T,
    setting: Setting,
    delta: Option<T>,
    options: BisectionOptions,
    rng: &mut ChaCha8Rng,
) -> Result<(T, BisectionTrace<T>)> {
    check_eps(eps)?;
    let i_max = ceil_log2_inv(eps);
    let piece_eps = if options.incremental {
        eps / T::from_usize_lossy(i_max)
    } else {
        eps
    };
    let mut oracle = SettingOracle::new(setting, piece_eps, delta, rng)?;
    let before = d.queries();
    let two = T::lit(2.0);
    let (mut lo, mut hi) = (T::zero(), T::one());
    let mut points = Vec::with_capacity(i_max);
    let mut intervals = Vec::with_capacity(i_max);
    let mut last = (T::zero(), T::zero());
    let mut stop = StopReason::MaxIters;
    let mut x = (lo + hi) / two;
    for i in 1..=i_max {
        x = (lo + hi) / two;
        let mass = if options.incremental {
            let (x_prev, m_prev) = last;
            let piece = if x >= x_prev {
                oracle.integral(d, x_prev, x)?
            } else {
                -oracle.integral(d, x, x_prev)?
            };
            m_prev + piece
        } else {
            oracle.integral(d, T::zero(), x)?
        };
        last = (x, mass);
        let g = mass - target;
        points.push((x, g));
        intervals.push((lo, hi));
        if g.abs() <= eps {
            stop = StopReason::ResidualSmall;
            break;
        }
        if i == i_max {
            break;
        }
        // ties go left
        if g >= T::zero() {
            hi = x;
        } else {
            lo = x;
        }
    }
    let trace = BisectionTrace {
        i0: points.len(),
        i_max,
        points,
        intervals,
        stop_reason: stop,
        total_queries: d.queries() - before,
    };
    Ok((x, trace))
}

/// Approximates the median to precision `eps` under `setting`.
pub fn median_bisection<T: Real>(
    d: &Density<T>,
    eps: T,
    setting: Setting,
    criterion: Criterion,
    rng: &mut ChaCha8Rng,
) -> Result<MedianResult<T>> {
    median_bisection_with(d, eps, setting, criterion, BisectionOptions::default(), rng)
}

pub fn median_bisection_with<T: Real>(
    d: &Density<T>,
    eps: T,
    setting: Setting,
    criterion: Criterion,
    options: BisectionOptions,
    rng: &mut ChaCha8Rng,
) -> Result<MedianResult<T>> {
    check_eps(eps)?;
    let params = d.params();
    let guarantee = match criterion {
        Criterion::Residual => params.residual_factor() * eps,
        Criterion::Absolute => params.absolute_factor()? * eps,
    };
    let delta = delta_budget(setting, eps)?;
    let (xi_hat, trace) = perturbed_bisection(d, T::lit(0.5), eps, setting, delta, options, rng)?;
    let interval_width_guarantee = match trace.stop_reason {
        StopReason::MaxIters => Some(eps),
        StopReason::ResidualSmall => None,
    };
    Ok(MedianResult {
        xi_hat,
        criterion,
        eps,
        setting,
        delta,
        guarantee,
        interval_width_guarantee,
        trace,
    })
}
