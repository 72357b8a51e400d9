//! Fixed quadrature and interpolation rules on reference intervals.

use crate::scalar::Real;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1);
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Work in f64 then round: keeps f32 nodes at full precision.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = T::lit(-x);
        nodes[n - 1 - i] = T::lit(x);
        weights[i] = T::lit(w);
        weights[n - 1 - i] = T::lit(w);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A Gauss–Legendre rule mapped on demand to `[a, b]`.
#[derive(Clone, Debug)]
pub struct GaussRule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussRule<T> {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    pub fn integrate(&self, a: T, b: T, mut f: impl FnMut(T) -> T) -> T {
        let half = (b - a) / T::lit(2.0);
        let mid = (a + b) / T::lit(2.0);
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + w * f(mid + half * x))
            * half
    }
}

/// Equispaced interpolation rule with `degree + 1` nodes on a unit cell.
///
/// Degree 0 uses the midpoint; higher degrees are closed (nodes include both
/// cell endpoints), so neighbouring cells share endpoint values.
#[derive(Clone, Debug)]
pub struct EquispacedRule<T> {
    degree: usize,
    /// Node positions in `[0, 1]`.
    pub nodes: Vec<T>,
    /// Weights on the unit cell; they sum to one.
    pub weights: Vec<T>,
    /// `max_t Σ |ℓ_i^{(j)}(t)|` on `[0, 1]` for `j = 0..=degree`.
    derivative_lebesgue: Vec<T>,
}

impl<T: Real> EquispacedRule<T> {
    pub fn new(degree: usize) -> Self {
        let nodes: Vec<T> = if degree == 0 {
            vec![T::lit(0.5)]
        } else {
            (0..=degree)
                .map(|i| T::from_usize_lossy(i) / T::from_usize_lossy(degree))
                .collect()
        };
        let basis: Vec<Vec<T>> = (0..nodes.len())
            .map(|i| lagrange_coeffs(&nodes, i))
            .collect();
        let weights = basis
            .iter()
            .map(|c| {
                c.iter().enumerate().fold(T::zero(), |acc, (k, &ck)| {
                    acc + ck / T::from_usize_lossy(k + 1)
                })
            })
            .collect();
        let grid = 2000;
        let mut derivative_lebesgue = vec![T::zero(); degree + 1];
        for (j, slot) in derivative_lebesgue.iter_mut().enumerate() {
            let derived: Vec<Vec<T>> = basis.iter().map(|c| poly_derivative(c, j)).collect();
            let mut best = T::zero();
            for g in 0..=grid {
                let t = T::from_usize_lossy(g) / T::from_usize_lossy(grid);
                let s = derived
                    .iter()
                    .fold(T::zero(), |acc, c| acc + poly_eval(c, t).abs());
                best = best.max(s);
            }
            // the grid maximum undershoots the true supremum slightly
            *slot = best * T::lit(1.01);
        }
        Self {
            degree,
            nodes,
            weights,
            derivative_lebesgue,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Lebesgue constant of the node set on the cell.
    pub fn lebesgue(&self) -> T {
        self.derivative_lebesgue[0]
    }

    /// Bound on `Σ |ℓ_i^{(j)}|` for a unit cell; scale by `h^{-j}` for cell width `h`.
    pub fn derivative_lebesgue(&self, j: usize) -> T {
        self.derivative_lebesgue[j]
    }

    /// Value of the interpolant at local coordinate `t ∈ [0, 1]`.
    pub fn interpolate(&self, values: &[T], t: T) -> T {
        // Barycentric-free Lagrange evaluation; degrees here are tiny.
        let mut acc = T::zero();
        for (i, &vi) in values.iter().enumerate() {
            let mut l = T::one();
            for (k, &xk) in self.nodes.iter().enumerate() {
                if k != i {
                    l = l * (t - xk) / (self.nodes[i] - xk);
                }
            }
            acc = acc + vi * l;
        }
        acc
    }
}

/// Monomial coefficients of the `i`-th Lagrange basis polynomial.
fn lagrange_coeffs<T: Real>(nodes: &[T], i: usize) -> Vec<T> {
    let mut c = vec![T::one()];
    let mut denom = T::one();
    for (k, &xk) in nodes.iter().enumerate() {
        if k == i {
            continue;
        }
        let mut next = vec![T::zero(); c.len() + 1];
        for (p, &cp) in c.iter().enumerate() {
            next[p + 1] = next[p + 1] + cp;
            next[p] = next[p] - cp * xk;
        }
        c = next;
        denom = denom * (nodes[i] - xk);
    }
    c.into_iter().map(|v| v / denom).collect()
}

fn poly_derivative<T: Real>(c: &[T], order: usize) -> Vec<T> {
    let mut c = c.to_vec();
    for _ in 0..order {
        if c.len() <= 1 {
            return vec![T::zero()];
        }
        c = c
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &v)| v * T::from_usize_lossy(k))
            .collect();
    }
    c
}

fn poly_eval<T: Real>(c: &[T], t: T) -> T {
    c.iter().rev().fold(T::zero(), |acc, &v| acc * t + v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = GaussRule::<f64>::new(10);
        let v = rule.integrate(0.0, 2.0, |x| x.powi(19));
        assert!((v - 2f64.powi(20) / 20.0).abs() < 1e-9);
        let (_, w) = gauss_legendre::<f64>(7);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn newton_cotes_weights() {
        let simpson = EquispacedRule::<f64>::new(2);
        let expect = [1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0];
        for (w, e) in simpson.weights.iter().zip(expect) {
            assert!((w - e).abs() < 1e-14);
        }
        let mid = EquispacedRule::<f64>::new(0);
        assert_eq!(mid.weights, vec![1.0]);
        assert!((mid.lebesgue() - 1.01).abs() < 1e-12);
        let trap = EquispacedRule::<f64>::new(1);
        assert!((trap.lebesgue() - 1.01).abs() < 1e-12);
        // trapezoid basis derivatives are ±1 each
        assert!((trap.derivative_lebesgue(1) - 2.02).abs() < 1e-12);
    }

    #[test]
    fn interpolation_reproduces_degree_r_polynomials() {
        let rule = EquispacedRule::<f64>::new(3);
        let p = |t: f64| 1.0 - 2.0 * t + 0.5 * t.powi(3);
        let vals: Vec<f64> = rule.nodes.iter().map(|&t| p(t)).collect();
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            assert!((rule.interpolate(&vals, t) - p(t)).abs() < 1e-13);
        }
    }
}
