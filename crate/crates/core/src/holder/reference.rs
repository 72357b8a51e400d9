//! High-accuracy CDF tables used only to score solvers.

use crate::quadrature::GaussRule;
use crate::scalar::Real;

const MAX_DEPTH: usize = 48;

/// Cumulative distribution function tabulated by adaptive Gauss–Legendre
/// quadrature over cells that never straddle a declared breakpoint.
#[derive(Clone, Debug)]
pub struct ReferenceCdf<T> {
    starts: Vec<T>,
    cumulative: Vec<T>,
    total: T,
    rule: GaussRule<T>,
}

impl<T: Real> ReferenceCdf<T> {
    /// `breakpoints` are points of reduced smoothness inside `(0, 1)`.
    pub fn tabulate(f: &dyn Fn(T) -> T, breakpoints: &[T]) -> Self {
        let coarse = GaussRule::new(10);
        let fine = GaussRule::new(20);
        let mut knots = vec![T::zero(), T::one()];
        knots.extend(
            breakpoints
                .iter()
                .copied()
                .filter(|&b| b > T::zero() && b < T::one()),
        );
        knots.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        knots.dedup();
        let tol = T::epsilon() * T::lit(4.0);

        let mut cells: Vec<(T, T)> = Vec::new();
        for pair in knots.windows(2) {
            let mut stack = vec![(pair[0], pair[1], 0usize)];
            while let Some((u, v, depth)) = stack.pop() {
                let lo = coarse.integrate(u, v, f);
                let hi = fine.integrate(u, v, f);
                if (hi - lo).abs() <= tol * (v - u) || depth >= MAX_DEPTH {
                    cells.push((u, hi));
                } else {
                    let m = (u + v) / T::lit(2.0);
                    stack.push((m, v, depth + 1));
                    stack.push((u, m, depth + 1));
                }
            }
        }
        cells.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite cells"));
        let mut starts = Vec::with_capacity(cells.len());
        let mut cumulative = Vec::with_capacity(cells.len());
        // Kahan summation keeps the tail of the table at rounding level.
        let (mut sum, mut comp) = (T::zero(), T::zero());
        for (u, mass) in cells {
            starts.push(u);
            cumulative.push(sum);
            let y = mass - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        Self {
            starts,
            cumulative,
            total: sum,
            rule: fine,
        }
    }

    pub fn total_mass(&self) -> T {
        self.total
    }

    pub fn cell_count(&self) -> usize {
        self.starts.len()
    }

    /// `F(x)`; `f` must be the density the table was built from.
    pub fn eval(&self, f: &dyn Fn(T) -> T, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        if x >= T::one() {
            return self.total;
        }
        let idx = match self
            .starts
            .binary_search_by(|s| s.partial_cmp(&x).expect("finite abscissa"))
        {
            Ok(i) => return self.cumulative[i],
            Err(i) => i - 1,
        };
        self.cumulative[idx] + self.rule.integrate(self.starts[idx], x, f)
    }
}

/// Inverts a nondecreasing function on `[0, 1]` by bisection to rounding level.
pub(crate) fn invert_monotone<T: Real>(g: impl Fn(T) -> T, target: T) -> T {
    let (mut lo, mut hi) = (T::zero(), T::one());
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / T::lit(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_cdf_matches_symbolic_antiderivative() {
        let f = |x: f64| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).sin();
        let cdf = ReferenceCdf::tabulate(&f, &[]);
        for k in 0..=100 {
            let x = k as f64 / 100.0;
            let exact =
                x + (1.0 - (2.0 * std::f64::consts::PI * x).cos()) / (4.0 * std::f64::consts::PI);
            assert!((cdf.eval(&f, x) - exact).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn kink_is_resolved_with_breakpoint() {
        let f = |x: f64| if x > 0.3 { 2.0 } else { 0.0 };
        let cdf = ReferenceCdf::tabulate(&f, &[0.3]);
        assert!((cdf.total_mass() - 1.4).abs() < 1e-14);
        assert!((cdf.eval(&f, 0.5) - 0.4).abs() < 1e-14);
    }

    #[test]
    fn inversion() {
        let x = invert_monotone(|x: f64| x * x, 0.25);
        assert!((x - 0.5).abs() < 1e-15);
    }
}
