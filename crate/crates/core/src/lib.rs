//! Median and quantile estimation for smooth densities on `[0, 1]` under
//! deterministic, randomized and simulated-quantum query models.
//!
//! The numeric core is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix the common `f64` instantiations.

// `!(x > 0)` style guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod amplify;
pub mod error;
pub mod harness;
pub mod holder;
pub mod integrate;
pub mod median;
pub mod quadrature;
pub mod quantiles;
pub mod quantum;
pub mod scalar;
pub mod setting;

pub use error::{Error, Result};
pub use holder::{builtin_catalog, builtin_catalog_with, verify_membership, Density, HolderParams};
pub use median::{median_bisection, MedianResult};
pub use setting::{Criterion, Setting};

pub type DensityF64 = holder::Density<f64>;
pub type DensityF32 = holder::Density<f32>;
pub type HolderParamsF64 = holder::HolderParams<f64>;
pub type MedianResultF64 = median::MedianResult<f64>;
pub type QuantileEstimateF64 = quantiles::QuantileEstimate<f64>;
pub type BumpFamilyF64 = adversary::BumpFamily<f64>;
