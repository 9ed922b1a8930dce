//! Closed-form trajectory models with exact derivatives.
//!
//! A model is, per coordinate, a polynomial (ascending coefficients)
//! plus a finite sum of sinusoids. This class is closed under the dual
//! affine transformation, which is what makes it usable as the oracle
//! side of invariance checks: derivatives of any order are evaluated
//! symbolically, with no approximation step.

use crate::error::Result;
use crate::linalg::Vec3;
use crate::scalar::Real;
use crate::spline::{DerivativeColumns, DerivativeStack, STACK_ORDERS};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// `amplitude * sin(angular_frequency * t + phase)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sinusoid<T> {
    pub amplitude: T,
    pub angular_frequency: T,
    pub phase: T,
}

impl<T: Real> Sinusoid<T> {
    /// d^order/dt^order of the sinusoid: each derivative multiplies by
    /// the frequency and advances the phase by a quarter period.
    pub fn derivative(&self, order: usize, t: T) -> T {
        let half_pi = T::from_f64_lossy(std::f64::consts::FRAC_PI_2);
        let shift = T::from_usize(order).unwrap() * half_pi;
        self.amplitude
            * self.angular_frequency.powi(order as i32)
            * (self.angular_frequency * t + self.phase + shift).sin()
    }
}

/// One coordinate: polynomial coefficients (ascending powers) plus
/// sinusoids.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoordinateModel<T> {
    pub coefficients: Vec<T>,
    pub sinusoids: Vec<Sinusoid<T>>,
}

impl<T: Real> CoordinateModel<T> {
    pub fn polynomial(coefficients: Vec<T>) -> Self {
        CoordinateModel {
            coefficients,
            sinusoids: Vec::new(),
        }
    }

    pub fn derivative(&self, order: usize, t: T) -> T {
        let mut acc = T::zero();
        // d^m/dt^m a_k t^k = a_k k!/(k-m)! t^(k-m)
        for (k, a) in self.coefficients.iter().enumerate() {
            if k < order {
                continue;
            }
            let mut factor = T::one();
            for f in (k - order + 1)..=k {
                factor = factor * T::from_usize(f).unwrap();
            }
            acc = acc + *a * factor * t.powi((k - order) as i32);
        }
        for s in &self.sinusoids {
            acc = acc + s.derivative(order, t);
        }
        acc
    }
}

/// Closed-form 3D trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryModel<T> {
    pub coords: [CoordinateModel<T>; 3],
}

impl<T: Real> TrajectoryModel<T> {
    pub fn new(coords: [CoordinateModel<T>; 3]) -> Self {
        TrajectoryModel { coords }
    }

    pub fn constant(p: Vec3<T>) -> Self {
        TrajectoryModel {
            coords: [
                CoordinateModel::polynomial(vec![p[0]]),
                CoordinateModel::polynomial(vec![p[1]]),
                CoordinateModel::polynomial(vec![p[2]]),
            ],
        }
    }

    pub fn value(&self, t: T) -> Vec3<T> {
        self.derivative(0, t)
    }

    pub fn derivative(&self, order: usize, t: T) -> Vec3<T> {
        [
            self.coords[0].derivative(order, t),
            self.coords[1].derivative(order, t),
            self.coords[2].derivative(order, t),
        ]
    }

    pub fn sample(&self, grid: &[T]) -> Vec<Vec3<T>> {
        grid.iter().map(|&t| self.value(t)).collect()
    }

    /// Generic random family used by the analytic verification path:
    /// degree-4 polynomial with factorially damped coefficients plus two
    /// sinusoids per coordinate. Paired with a short sample window
    /// (see [`crate::verify`]), all five derivative orders come out with
    /// comparable magnitudes, which keeps the determinant ratios well
    /// conditioned.
    pub fn random_generic<R: Rng>(rng: &mut R) -> TrajectoryModel<T> {
        let coords = std::array::from_fn(|_| {
            let mut coefficients = Vec::with_capacity(5);
            let mut fact = 1.0f64;
            for k in 0..5 {
                if k > 0 {
                    fact *= k as f64;
                }
                let g: f64 = StandardNormal.sample(rng);
                coefficients.push(T::from_f64_lossy(g / fact));
            }
            let sinusoids = (0..2)
                .map(|_| {
                    let g: f64 = StandardNormal.sample(rng);
                    Sinusoid {
                        amplitude: T::from_f64_lossy(0.5 * g),
                        angular_frequency: T::from_f64_lossy(log_uniform(rng, 1.0, 3.0)),
                        phase: T::from_f64_lossy(rng.gen_range(0.0..std::f64::consts::TAU)),
                    }
                })
                .collect();
            CoordinateModel {
                coefficients,
                sinusoids,
            }
        });
        TrajectoryModel { coords }
    }

    /// Fast multi-sinusoid family in frame units (angular frequencies in
    /// `[0.5, 1.5]` rad/frame with a small linear drift). Used to build
    /// synthetic skeleton sequences whose determinants stay well above
    /// the epsilon guard.
    pub fn random_fast_motion<R: Rng>(rng: &mut R) -> TrajectoryModel<T> {
        let coords = std::array::from_fn(|_| {
            let g0: f64 = StandardNormal.sample(rng);
            let g1: f64 = StandardNormal.sample(rng);
            let coefficients = vec![T::from_f64_lossy(g0), T::from_f64_lossy(0.02 * g1)];
            let sinusoids = [1.0, 0.6, 0.35]
                .iter()
                .map(|&scale| {
                    let g: f64 = StandardNormal.sample(rng);
                    Sinusoid {
                        amplitude: T::from_f64_lossy(scale * g),
                        angular_frequency: T::from_f64_lossy(log_uniform(rng, 0.5, 1.5)),
                        phase: T::from_f64_lossy(rng.gen_range(0.0..std::f64::consts::TAU)),
                    }
                })
                .collect();
            CoordinateModel {
                coefficients,
                sinusoids,
            }
        });
        TrajectoryModel { coords }
    }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Exact derivatives 0..4 on the grid, then centered and normalized
/// identically to the spline path.
pub fn differentiate_analytic<T: Real>(
    model: &TrajectoryModel<T>,
    grid: &[T],
) -> Result<DerivativeStack<T>> {
    let mut stack = differentiate_analytic_raw(model, grid)?;
    stack.center_and_normalize();
    Ok(stack)
}

/// Exact derivatives on the grid with no centering or normalization.
pub fn differentiate_analytic_raw<T: Real>(
    model: &TrajectoryModel<T>,
    grid: &[T],
) -> Result<DerivativeStack<T>> {
    let mut frames = Vec::with_capacity(grid.len());
    for &t in grid {
        let mut cols: DerivativeColumns<T> = [[T::zero(); 3]; STACK_ORDERS];
        for (order, col) in cols.iter_mut().enumerate() {
            *col = model.derivative(order, t);
        }
        frames.push(cols);
    }
    Ok(DerivativeStack::from_frames(frames))
}
