//! Confidence boosting by the median of independent repetitions.

/// Per-repetition failure probability the estimators are built for.
pub const PER_REPETITION_FAILURE: f64 = 0.25;

/// Repetition count `K = ⌈8·ln(1/δ)⌉`.
///
/// The median (upper middle for even `K`) is bad only if at least `K/2`
/// repetitions are. With per-repetition failure at most 1/4, Hoeffding gives
/// `P(median fails) ≤ exp(−2K(1/4)²) = exp(−K/8) ≤ δ`.
pub fn repetitions(delta: f64) -> usize {
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    (8.0 * (1.0 / delta).ln()).ceil().max(1.0) as usize
}

/// Median of a buffer; sorts in place so the result ignores arrival order.
pub fn median_in_place<T: PartialOrd + Copy>(values: &mut [T]) -> T {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).expect("comparable estimates"));
    values[values.len() / 2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn doubling_log_inverse_delta_doubles_k() {
        for delta in [0.1, 0.01, 1e-3] {
            let k1 = repetitions(delta);
            let k2 = repetitions(delta * delta);
            assert!((k2 as i64 - 2 * k1 as i64).abs() <= 1, "{k1} {k2}");
        }
    }

    #[test]
    fn median_failure_is_below_hoeffding_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = 0.25;
        for k in [4usize, 9, 16, 25] {
            let trials = 40_000;
            let mut fails = 0;
            for _ in 0..trials {
                let bad = (0..k).filter(|_| rng.random::<f64>() < p).count();
                if 2 * bad >= k {
                    fails += 1;
                }
            }
            let rate = fails as f64 / trials as f64;
            let bound = (-(k as f64) / 8.0).exp();
            let sigma = (bound * (1.0 - bound) / trials as f64).sqrt();
            assert!(
                rate <= bound + 3.0 * sigma,
                "k={k} rate={rate} bound={bound}"
            );
        }
    }

    #[test]
    fn median_ignores_order() {
        let mut a = [3.0, 1.0, 2.0];
        let mut b = [2.0, 3.0, 1.0];
        assert_eq!(median_in_place(&mut a), median_in_place(&mut b));
    }
}
