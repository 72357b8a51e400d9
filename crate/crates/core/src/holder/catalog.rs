//! Named test densities with analytic derivatives and certified class constants.
//!
//! Constants default to `D = 2`, `H = 10`, `γ = 1/2` and are raised to the
//! density's tight bound wherever it exceeds them, so every entry is a member
//! of the class it reports.

use super::{Density, HolderParams};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const CATALOG_NAMES: &[&str] = &["uniform", "sine-<a>", "poly-<k>", "kink-<b>"];

const DEFAULT_D: f64 = 2.0;
const DEFAULT_H: f64 = 10.0;
const DEFAULT_GAMMA: f64 = 0.5;

/// Looks up a catalog density in the class `r = 1, ρ = 1`.
pub fn builtin_catalog<T: Real>(name: &str) -> Result<Density<T>> {
    builtin_catalog_with(name, 1, T::one())
}

/// Catalog entries:
///
/// * `uniform`: `f ≡ 1`.
/// * `sine-a`: `1 + a·sin(2πx)`, `|a| < 1`.
/// * `poly-k`: `c·(1 + x)^k` normalised, integer `k ≥ 0`.
/// * `kink-b`: `c·(1 + b·(x − 1/2)₊^{r+ρ})`, `b ≥ 0`; its `r`-th derivative
///   is exactly `ρ`-Hölder, so it sits on the class boundary.
pub fn builtin_catalog_with<T: Real>(name: &str, r: usize, rho: T) -> Result<Density<T>> {
    let lookup = || Error::Lookup(name.to_string());
    let (family, arg) = match name.split_once('-') {
        Some((f, a)) => (f, Some(a)),
        None => (name, None),
    };
    let arg_f64 =
        || -> Result<f64> { arg.ok_or_else(lookup)?.parse::<f64>().map_err(|_| lookup()) };
    match (family, arg) {
        ("uniform", None) => uniform(r, rho),
        ("sine", Some(_)) => {
            let a = arg_f64()?;
            if !(a.abs() < 1.0) {
                return Err(lookup());
            }
            sine(name, T::lit(a), r, rho)
        }
        ("poly", Some(a)) => {
            let k: usize = a.parse().map_err(|_| lookup())?;
            poly(name, k, r, rho)
        }
        ("kink", Some(_)) => {
            let b = arg_f64()?;
            if !(b >= 0.0) {
                return Err(lookup());
            }
            kink(name, T::lit(b), r, rho)
        }
        _ => Err(lookup()),
    }
}

fn params<T: Real>(r: usize, rho: T, d: T, h: T, gamma: T) -> Result<HolderParams<T>> {
    HolderParams::new(
        r,
        rho,
        d.max(T::lit(DEFAULT_D)),
        h.max(T::lit(DEFAULT_H)),
        gamma.min(T::lit(DEFAULT_GAMMA)),
    )
}

/// Hölder-ρ constant of a function with Lipschitz constant `lip` and
/// oscillation `osc` on `[0, 1]`: `min(L t, osc) ≤ L^ρ osc^{1−ρ} t^ρ`.
fn holder_from_lipschitz<T: Real>(lip: T, osc: T, rho: T) -> T {
    if rho >= T::one() {
        lip
    } else {
        lip.powf(rho) * osc.powf(T::one() - rho)
    }
}

fn uniform<T: Real>(r: usize, rho: T) -> Result<Density<T>> {
    let p = params(r, rho, T::one(), T::zero(), T::one())?;
    Density::new(
        "uniform",
        p,
        |_x: T, j: usize| if j == 0 { T::one() } else { T::zero() },
        &[],
    )
}

fn sine<T: Real>(name: &str, a: T, r: usize, rho: T) -> Result<Density<T>> {
    let tau = T::TAU();
    let mut d = T::one() + a.abs();
    for j in 1..=r {
        d = d.max(tau.powi(j as i32) * a.abs());
    }
    let top = tau.powi(r as i32) * a.abs();
    let h = holder_from_lipschitz(top * tau, top * T::lit(2.0), rho);
    let p = params(r, rho, d, h, T::one() - a.abs())?;
    let f = move |x: T, j: usize| {
        // d^j/dx^j sin(τx) = τ^j sin(τx + jπ/2)
        let phase = tau * x + T::FRAC_PI_2() * T::from_usize_lossy(j);
        let v = a * tau.powi(j as i32) * phase.sin();
        if j == 0 {
            T::one() + v
        } else {
            v
        }
    };
    Density::new(name, p, f, &[])
}

fn falling<T: Real>(s: T, j: usize) -> T {
    (0..j).fold(T::one(), |acc, i| acc * (s - T::from_usize_lossy(i)))
}

fn poly<T: Real>(name: &str, k: usize, r: usize, rho: T) -> Result<Density<T>> {
    let two = T::lit(2.0);
    let kf = T::from_usize_lossy(k);
    let c = (kf + T::one()) / (two.powi(k as i32 + 1) - T::one());
    let deriv = move |x: T, j: usize| -> T {
        if j > k {
            T::zero()
        } else {
            c * falling(kf, j) * (T::one() + x).powi((k - j) as i32)
        }
    };
    let mut d = T::zero();
    for j in 0..=r {
        d = d.max(deriv(T::one(), j));
    }
    let lip = deriv(T::one(), r + 1);
    let osc = deriv(T::one(), r) - deriv(T::zero(), r);
    let h = holder_from_lipschitz(lip, osc, rho);
    let p = params(r, rho, d, h, c)?;
    Density::new(name, p, deriv, &[])
}

fn kink<T: Real>(name: &str, b: T, r: usize, rho: T) -> Result<Density<T>> {
    let half = T::lit(0.5);
    let s = T::from_usize_lossy(r) + rho;
    let c = T::one() / (T::one() + b * half.powf(s + T::one()) / (s + T::one()));
    let deriv = move |x: T, j: usize| -> T {
        let t = (x - half).max(T::zero());
        let bump = if j == 0 {
            b * t.powf(s)
        } else if t > T::zero() {
            b * falling(s, j) * t.powf(s - T::from_usize_lossy(j))
        } else {
            T::zero()
        };
        if j == 0 {
            c * (T::one() + bump)
        } else {
            c * bump
        }
    };
    let mut d = T::zero();
    for j in 0..=r {
        d = d.max(deriv(T::one(), j).abs());
    }
    // (·)₊^ρ is ρ-Hölder with constant one
    let h = c * b * falling(s, r);
    let p = params(r, rho, d, h, c)?;
    Density::new(name, p, deriv, &[half])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holder::verify_membership;

    #[test]
    fn uniform_entry() {
        let d = builtin_catalog::<f64>("uniform").unwrap();
        assert_eq!(d.eval_counted(0.3, 0).unwrap(), 1.0);
        assert_eq!(d.eval_counted(0.3, 1).unwrap(), 0.0);
        for k in 0..=10 {
            let x = k as f64 / 10.0;
            assert!((d.reference_cdf(x) - x).abs() < 1e-14);
        }
    }

    #[test]
    fn sine_entry_value_and_cdf() {
        let d = builtin_catalog::<f64>("sine-0.5").unwrap();
        assert!((d.eval_counted(0.25, 0).unwrap() - 1.5).abs() < 1e-15);
        let pi = std::f64::consts::PI;
        for k in 0..=50 {
            let x = k as f64 / 50.0;
            let exact = x + (1.0 - (2.0 * pi * x).cos()) / (4.0 * pi);
            assert!((d.reference_cdf(x) - exact).abs() < 1e-12);
        }
        // F(1/2) = 1/2 + 1/(2π) > 1/2, so the median lies left of 1/2
        let xi = d.reference_median();
        assert!(xi < 0.5);
        let exact_at_xi = xi + (1.0 - (2.0 * pi * xi).cos()) / (4.0 * pi);
        assert!((exact_at_xi - 0.5).abs() < 1e-12);
        assert!((d.params().d - pi).abs() < 1e-12);
    }

    #[test]
    fn unknown_names_are_lookup_errors() {
        for bad in [
            "gauss",
            "sine-1.5",
            "sine-x",
            "poly--1",
            "kink-",
            "uniform-2",
        ] {
            assert!(
                matches!(builtin_catalog::<f64>(bad), Err(Error::Lookup(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn every_entry_is_a_member_of_its_class() {
        for (r, rho) in [(0usize, 0.5), (0, 1.0), (1, 0.5), (1, 1.0), (2, 1.0)] {
            for name in [
                "uniform", "sine-0.5", "sine-0.2", "poly-2", "poly-3", "kink-4",
            ] {
                let d = builtin_catalog_with::<f64>(name, r, rho).unwrap();
                let rep = verify_membership(&d, 512, 1e-8);
                assert!(rep.passes(), "{name} r={r} rho={rho}: {rep:?}");
                assert!((d.reference_mass() - 1.0).abs() < 1e-12, "{name}");
            }
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let h = 1e-6;
        for name in ["sine-0.5", "poly-3", "kink-4"] {
            let d = builtin_catalog_with::<f64>(name, 2, 1.0).unwrap();
            for j in 1..=2 {
                for k in 1..20 {
                    let x = k as f64 / 20.0 + 0.013;
                    let fd = (d.eval_uncounted(x + h, j - 1) - d.eval_uncounted(x - h, j - 1))
                        / (2.0 * h);
                    let an = d.eval_uncounted(x, j);
                    assert!(
                        (fd - an).abs() < 1e-4 * (1.0 + an.abs()),
                        "{name} j={j} x={x}"
                    );
                }
            }
        }
    }

    #[test]
    fn f32_catalog_works() {
        let d = builtin_catalog::<f32>("sine-0.5").unwrap();
        assert!((d.eval_counted(0.25, 0).unwrap() - 1.5).abs() < 1e-6);
        assert!((d.reference_mass() - 1.0).abs() < 1e-5);
    }
}
