//! Scalar abstractions for the numeric kernels.
//!
//! Determinants and rational invariant products only need ring/field
//! arithmetic, so they are generic over [`Scalar`] and work with exact
//! types (e.g. arbitrary-precision rationals) as well as floats. The
//! spline fit, transforms and verification harness need ordering,
//! `sqrt`, `tanh` and friends, hence the narrower [`Real`] bound.

use std::ops::Neg;

/// Ring/field scalar: enough arithmetic for determinants and
/// products/ratios of them. Implemented by `f32`, `f64`, and exact
/// rational types.
pub trait Scalar: num_traits::Num + Clone + PartialEq + Neg<Output = Self> {}

impl<T> Scalar for T where T: num_traits::Num + Clone + PartialEq + Neg<Output = T> {}

/// Floating-point scalar used by the spline, transform and verification
/// paths. `f32` and `f64` qualify; the pipeline default is `f64`.
pub trait Real:
    Scalar
    + num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + std::fmt::Debug
    + std::fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Shorthand for lossy conversion from `f64` literals.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}
