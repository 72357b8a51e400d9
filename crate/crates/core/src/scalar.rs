//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar the algorithms are generic over.
///
/// Blanket-implemented for `f32` and `f64`. Random draws and the
/// amplitude-estimation outcome distribution are sampled in `f64` and
/// converted, so a narrower `T` only narrows the arithmetic on `T`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal; panics only for values `T` cannot represent at all.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// `n!` as a scalar.
pub fn factorial<T: Real>(n: usize) -> T {
    (1..=n).fold(T::one(), |acc, k| acc * T::from_usize_lossy(k))
}

/// `⌈log₂(1/eps)⌉`, the bisection step cap. Base-2 throughout the crate.
pub fn ceil_log2_inv<T: Real>(eps: T) -> usize {
    let v = (T::one() / eps).log2();
    let c = v.ceil();
    // 2^-k must give exactly k even when log2 rounds up by an ulp
    let k = c.to_usize().unwrap_or(0);
    if k > 0 && (T::lit(2.0).powi(-(k as i32 - 1))) <= eps {
        k - 1
    } else {
        k
    }
}
