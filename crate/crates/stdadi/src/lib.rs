//! Affine differential invariant features for 3D joint trajectories.
//!
//! A joint trajectory observed twice — from another viewpoint, on a
//! larger skeleton, faster or slower — differs by a spatial affine map
//! `x -> A x + T` together with a uniform time rescaling
//! `u = (t - d) / c`. Determinants of three derivative orders of the
//! centered trajectory pick up only the factor `c^(i+j+k) det(A)` under
//! that action, so ratios of determinant products in which those
//! factors cancel are exact invariants. This crate computes them:
//!
//! * [`spline`] fits each trajectory with an interpolating quintic
//!   B-spline and evaluates derivative orders 0..4 per frame;
//! * [`invariant`] evaluates determinant ratios, including the fixed
//!   eight-component feature vector and the channel augmentation that
//!   appends `tanh`-squashed invariants to the raw coordinates;
//! * [`enumeration`] generates the whole degree ≤ 2, order ≤ 4 family
//!   of candidate ratios and audits function independence numerically;
//! * [`transforms`] models the dual affine action itself, including
//!   bounded random transforms for verification;
//! * [`analytic`] provides closed-form trajectories with exact
//!   derivatives, the oracle side of every check;
//! * [`verify`] runs the invariance checks end to end and produces
//!   deterministic reports;
//! * [`skeleton`], [`tensor`] and [`pipeline`] handle the file formats
//!   and batch featurization.
//!
//! Numeric kernels are generic over the scalar: determinant and ratio
//! evaluation need only ring/field arithmetic ([`Scalar`]), the rest of
//! the pipeline needs floating point ([`Real`]). The concrete aliases
//! below fix the pipeline default of `f64` computation (output tensors
//! are `f32`).

pub mod analytic;
pub mod enumeration;
pub mod error;
pub mod invariant;
pub mod linalg;
pub mod pipeline;
pub mod scalar;
pub mod skeleton;
pub mod spline;
pub mod tensor;
pub mod transforms;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};

/// Pipeline-precision scalar.
pub type Scalar64 = f64;
/// Derivative stack at pipeline precision.
pub type DerivativeStack64 = spline::DerivativeStack<f64>;
/// Trajectory at pipeline precision.
pub type JointTrajectory64 = spline::JointTrajectory<f64>;
/// Dual affine transform at pipeline precision.
pub type DualAffine64 = transforms::DualAffine<f64>;
/// Closed-form trajectory model at pipeline precision.
pub type TrajectoryModel64 = analytic::TrajectoryModel<f64>;
/// Invariant vector at pipeline precision.
pub type InvariantVector64 = invariant::InvariantVector<f64>;
/// Evaluation settings at pipeline precision.
pub type InvariantConfig64 = invariant::InvariantConfig<f64>;
