//! Quintic B-spline fitting and per-frame derivative stacks.
//!
//! Each joint trajectory is interpolated per coordinate by a degree-5
//! B-spline with knots at the sample times and not-a-knot end
//! conditions (the spline space has exactly one coefficient per sample,
//! so interpolation determines it uniquely). Derivatives of orders 0..4
//! are then evaluated at every sample time and assembled into a
//! [`DerivativeStack`].
//!
//! The stack is post-processed in two steps shared by every producer:
//! the order-0 column is centered by the trajectory mean (removing
//! translation), and the whole stack is divided by the RMS radius of
//! the centered positions (a pure spatial scaling, so it cannot change
//! any invariant downstream).
//!
//! Boundary behavior: not-a-knot reproduces polynomials up to degree 5
//! exactly in exact arithmetic, but the end rows of the collocation
//! system are the worst conditioned, so tight accuracy claims are made
//! for interior frames (five or more frames from either end) only.

mod banded;
mod basis;

use crate::error::{Error, Result};
use crate::linalg::{sub3, Vec3};
use crate::scalar::Real;
use banded::BandedMatrix;
use basis::{ders_basis_funs, find_span};

/// Spline degree used throughout.
pub const SPLINE_DEGREE: usize = 5;
/// Minimum number of samples a trajectory must have for the fit.
pub const MIN_SAMPLES: usize = 6;
/// Number of derivative orders carried per frame (orders 0..=4).
pub const STACK_ORDERS: usize = 5;
/// Interior margin (frames from each end) where tight tolerances apply.
pub const INTERIOR_MARGIN: usize = 5;
/// Floor applied to the RMS radius before dividing the stack by it.
pub const RADIUS_FLOOR: f64 = 1e-12;

/// Derivative columns at a single frame: `cols[i]` holds the order-`i`
/// derivative as a 3-vector.
pub type DerivativeColumns<T> = [Vec3<T>; STACK_ORDERS];

/// One joint's sampled 3D positions on a uniform time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTrajectory<T> {
    samples: Vec<Vec3<T>>,
    dt: T,
}

impl<T: Real> JointTrajectory<T> {
    /// Validates length (>= 6), finiteness, and a positive sampling step.
    pub fn new(samples: Vec<Vec3<T>>, dt: T) -> Result<Self> {
        if samples.len() < MIN_SAMPLES {
            return Err(Error::TrajectoryTooShort {
                len: samples.len(),
                min: MIN_SAMPLES,
            });
        }
        if !dt.is_finite() || dt <= T::zero() {
            return Err(Error::NonFiniteInput("sampling interval".into()));
        }
        for s in &samples {
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteInput("trajectory sample".into()));
            }
        }
        Ok(JointTrajectory { samples, dt })
    }

    /// Time grid in frame units (dt = 1).
    pub fn with_unit_dt(samples: Vec<Vec3<T>>) -> Result<Self> {
        Self::new(samples, T::one())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Vec3<T>] {
        &self.samples
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// Sample times `i * dt`.
    pub fn times(&self) -> Vec<T> {
        (0..self.samples.len())
            .map(|i| T::from_usize(i).unwrap() * self.dt)
            .collect()
    }
}

/// Per-frame derivatives of orders 0..4, with the order-0 column
/// centered by the trajectory mean and the whole stack scaled by the
/// inverse RMS radius (for the standard constructors).
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeStack<T> {
    frames: Vec<DerivativeColumns<T>>,
}

impl<T: Real> DerivativeStack<T> {
    pub fn from_frames(frames: Vec<DerivativeColumns<T>>) -> Self {
        DerivativeStack { frames }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, t: usize) -> &DerivativeColumns<T> {
        &self.frames[t]
    }

    pub fn frames(&self) -> &[DerivativeColumns<T>] {
        &self.frames
    }

    pub fn frames_mut(&mut self) -> &mut [DerivativeColumns<T>] {
        &mut self.frames
    }

    /// Mean of the order-0 column over frames.
    pub fn position_mean(&self) -> Vec3<T> {
        let mut mean = [T::zero(); 3];
        for f in &self.frames {
            for (m, v) in mean.iter_mut().zip(f[0].iter()) {
                *m = *m + *v;
            }
        }
        let inv = T::one() / T::from_usize(self.frames.len().max(1)).unwrap();
        mean.map(|v| v * inv)
    }

    /// Subtracts the mean from the order-0 column.
    pub fn center(&mut self) {
        let mean = self.position_mean();
        for f in &mut self.frames {
            f[0] = sub3(&f[0], &mean);
        }
    }

    /// RMS radius of the (already centered) order-0 column.
    pub fn rms_radius(&self) -> T {
        let mut acc = T::zero();
        for f in &self.frames {
            acc = acc + f[0][0] * f[0][0] + f[0][1] * f[0][1] + f[0][2] * f[0][2];
        }
        (acc / T::from_usize(self.frames.len().max(1)).unwrap()).sqrt()
    }

    /// Multiplies every column of every frame by `s`.
    pub fn scale(&mut self, s: T) {
        for f in &mut self.frames {
            for col in f.iter_mut() {
                for v in col.iter_mut() {
                    *v = *v * s;
                }
            }
        }
    }

    /// Divides the whole stack by the RMS radius, floored at
    /// [`RADIUS_FLOOR`]. Returns the radius actually used.
    pub fn normalize(&mut self) -> T {
        let r = self.rms_radius().max(T::from_f64_lossy(RADIUS_FLOOR));
        self.scale(T::one() / r);
        r
    }

    /// Centering followed by normalization, the standard post-processing.
    pub fn center_and_normalize(&mut self) -> T {
        self.center();
        self.normalize()
    }
}

/// Raw quintic-spline derivatives at every sample time: no centering,
/// no normalization. This is the linear map from samples to derivative
/// columns; tests rely on that linearity.
pub fn fit_derivatives<T: Real>(traj: &JointTrajectory<T>) -> Result<DerivativeStack<T>> {
    let n = traj.len();
    let x = traj.times();
    let knots = not_a_knot_knots(&x);
    let n_basis = n;

    let mut matrix = BandedMatrix::<T>::zeros(n, SPLINE_DEGREE, SPLINE_DEGREE);
    let mut spans = Vec::with_capacity(n);
    for (i, &xi) in x.iter().enumerate() {
        let span = find_span(xi, SPLINE_DEGREE, n_basis, &knots);
        spans.push(span);
        let vals = ders_basis_funs(span, xi, SPLINE_DEGREE, 0, &knots);
        for (r, &v) in vals[0].iter().enumerate() {
            matrix.set(i, span - SPLINE_DEGREE + r, v);
        }
    }
    let lu = matrix
        .factor()
        .expect("collocation matrix is nonsingular for a strictly increasing grid");

    let mut coefs: Vec<Vec3<T>> = vec![[T::zero(); 3]; n];
    for c in 0..3 {
        let mut rhs: Vec<T> = traj.samples().iter().map(|s| s[c]).collect();
        lu.solve_in_place(&mut rhs);
        for (coef, v) in coefs.iter_mut().zip(rhs) {
            coef[c] = v;
        }
    }

    let mut frames = Vec::with_capacity(n);
    for (i, &xi) in x.iter().enumerate() {
        let span = spans[i];
        let ders = ders_basis_funs(span, xi, SPLINE_DEGREE, STACK_ORDERS - 1, &knots);
        let mut cols: DerivativeColumns<T> = [[T::zero(); 3]; STACK_ORDERS];
        for (order, col) in cols.iter_mut().enumerate() {
            for (r, w) in ders[order].iter().enumerate() {
                let coef = &coefs[span - SPLINE_DEGREE + r];
                for c in 0..3 {
                    col[c] = col[c] + *w * coef[c];
                }
            }
        }
        frames.push(cols);
    }
    Ok(DerivativeStack::from_frames(frames))
}

/// Interpolating quintic fit, derivatives 0..4 at every frame, centered
/// order-0 column, stack normalized by the RMS radius.
///
/// The samples are centered before the fit: the collocation system then
/// sees an exactly zero right-hand side for constant trajectories, so
/// their stacks come out exactly zero instead of solver noise scaled up
/// by the radius floor. Centering commutes with the (linear) fit, so
/// nothing else changes.
pub fn fit_and_differentiate<T: Real>(traj: &JointTrajectory<T>) -> Result<DerivativeStack<T>> {
    let mut mean = [T::zero(); 3];
    for s in traj.samples() {
        for (m, v) in mean.iter_mut().zip(s.iter()) {
            *m = *m + *v;
        }
    }
    let inv = T::one() / T::from_usize(traj.len()).unwrap();
    let mean = mean.map(|v| v * inv);
    let centered: Vec<Vec3<T>> = traj.samples().iter().map(|s| sub3(s, &mean)).collect();
    let centered_traj = JointTrajectory::new(centered, traj.dt())?;
    let mut stack = fit_derivatives(&centered_traj)?;
    stack.center_and_normalize();
    Ok(stack)
}

/// Not-a-knot knot vector for quintic interpolation: full-multiplicity
/// end knots, interior knots at `x[3] .. x[n-4]`. The spline space then
/// has dimension `n`.
fn not_a_knot_knots<T: Real>(x: &[T]) -> Vec<T> {
    let n = x.len();
    let mut knots = Vec::with_capacity(n + 6);
    knots.extend(std::iter::repeat_n(x[0], 6));
    knots.extend_from_slice(&x[3..n - 3]);
    knots.extend(std::iter::repeat_n(x[n - 1], 6));
    knots
}

/// Worst absolute difference between two stacks, over all frames,
/// orders and coordinates. Test helper shared by the verification
/// harness.
pub fn max_column_abs_diff<T: Real>(a: &DerivativeStack<T>, b: &DerivativeStack<T>) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut worst = T::zero();
    for (fa, fb) in a.frames().iter().zip(b.frames()) {
        for (ca, cb) in fa.iter().zip(fb.iter()) {
            for (va, vb) in ca.iter().zip(cb.iter()) {
                worst = worst.max((*va - *vb).abs());
            }
        }
    }
    worst
}
