//! Rational determinant invariants of derivative stacks.
//!
//! A 3x3 determinant built from three distinct derivative orders of a
//! centered trajectory transforms as `det -> c^(i+j+k) det(A) det`
//! under the dual affine action, so it is a relative invariant. Ratios
//! of products with equal factor counts (cancelling `det(A)`) and equal
//! summed orders (cancelling `c`) are absolute invariants. The fixed
//! eight-component feature vector uses the ratios returned by
//! [`stdadi_specs`], evaluated per frame with a small denominator guard.
//!
//! The guard adds `epsilon` to the denominator *away from zero*
//! (`den + copysign(epsilon, den)`), so the guarded magnitude is at
//! least `epsilon` even for negative determinant products; the plain
//! `den + epsilon` form can itself hit zero.

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};
use crate::skeleton::SkeletonSequence;
use crate::spline::{DerivativeColumns, DerivativeStack, STACK_ORDERS};
use crate::tensor::{FeatureTensor, CHANNELS};
use ndarray::{Array4, ArrayView4};
use std::fmt;
use std::sync::OnceLock;

/// Highest derivative order a stack carries.
pub const MAX_ORDER: usize = STACK_ORDERS - 1;

/// Determinant of the 3x3 matrix whose columns are the derivative
/// orders `i`, `j`, `k` of the stack frame, in that order. Swapping two
/// indices flips the sign.
pub fn det_m<T: Scalar>(cols: &DerivativeColumns<T>, i: usize, j: usize, k: usize) -> Result<T> {
    for &order in &[i, j, k] {
        if order > MAX_ORDER {
            return Err(Error::OrderOutOfRange {
                order,
                max: MAX_ORDER,
            });
        }
    }
    if i == j || j == k || i == k {
        return Err(Error::RepeatedIndex { i, j, k });
    }
    Ok(crate::linalg::det3_cols(&cols[i], &cols[j], &cols[k]))
}

/// Sorted index triple `i < j < k`, the canonical label of one
/// determinant factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    i: u8,
    j: u8,
    k: u8,
}

impl Triple {
    pub fn new(i: usize, j: usize, k: usize) -> Result<Self> {
        if !(i < j && j < k) {
            return Err(Error::InvalidSpec(format!(
                "triple ({i},{j},{k}) must be strictly increasing"
            )));
        }
        if k > MAX_ORDER {
            return Err(Error::OrderOutOfRange {
                order: k,
                max: MAX_ORDER,
            });
        }
        Ok(Triple {
            i: i as u8,
            j: j as u8,
            k: k as u8,
        })
    }

    pub fn indices(&self) -> (usize, usize, usize) {
        (self.i as usize, self.j as usize, self.k as usize)
    }

    /// `i + j + k`, the power of the time scale this factor picks up.
    pub fn order_sum(&self) -> usize {
        (self.i + self.j + self.k) as usize
    }

    pub fn max_index(&self) -> usize {
        self.k as usize
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.i, self.j, self.k)
    }
}

/// A rational invariant: product of numerator determinants over product
/// of denominator determinants. Valid specs have equal factor counts on
/// both sides (degree) and equal summed orders (homogeneity), which is
/// exactly what cancels the transformation parameters.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonomialSpec {
    numerator: Vec<Triple>,
    denominator: Vec<Triple>,
}

impl MonomialSpec {
    pub fn new(mut numerator: Vec<Triple>, mut denominator: Vec<Triple>) -> Result<Self> {
        if numerator.is_empty() || numerator.len() != denominator.len() {
            return Err(Error::InvalidSpec(format!(
                "factor counts must match and be positive: {} vs {}",
                numerator.len(),
                denominator.len()
            )));
        }
        numerator.sort();
        denominator.sort();
        let num_sum: usize = numerator.iter().map(Triple::order_sum).sum();
        let den_sum: usize = denominator.iter().map(Triple::order_sum).sum();
        if num_sum != den_sum {
            return Err(Error::InvalidSpec(format!(
                "order sums differ ({num_sum} vs {den_sum}); the time scale would not cancel"
            )));
        }
        Ok(MonomialSpec {
            numerator,
            denominator,
        })
    }

    /// Convenience constructor from index tuples.
    pub fn from_indices(
        numerator: &[(usize, usize, usize)],
        denominator: &[(usize, usize, usize)],
    ) -> Result<Self> {
        let num = numerator
            .iter()
            .map(|&(i, j, k)| Triple::new(i, j, k))
            .collect::<Result<Vec<_>>>()?;
        let den = denominator
            .iter()
            .map(|&(i, j, k)| Triple::new(i, j, k))
            .collect::<Result<Vec<_>>>()?;
        MonomialSpec::new(num, den)
    }

    pub fn numerator(&self) -> &[Triple] {
        &self.numerator
    }

    pub fn denominator(&self) -> &[Triple] {
        &self.denominator
    }

    /// Number of determinant factors per side.
    pub fn degree(&self) -> usize {
        self.numerator.len()
    }

    /// Highest derivative order used anywhere in the ratio.
    pub fn order(&self) -> usize {
        self.numerator
            .iter()
            .chain(&self.denominator)
            .map(Triple::max_index)
            .max()
            .unwrap_or(0)
    }

    pub fn reciprocal(&self) -> MonomialSpec {
        MonomialSpec {
            numerator: self.denominator.clone(),
            denominator: self.numerator.clone(),
        }
    }

    /// Canonical enumeration form: numerator lexicographically below the
    /// denominator, and no factor shared between the two sides (a shared
    /// factor would cancel, leaving a lower-degree equivalent).
    pub fn is_canonical(&self) -> bool {
        self.numerator < self.denominator
            && self.numerator.iter().all(|t| !self.denominator.contains(t))
    }

    pub fn matches_up_to_reciprocal(&self, other: &MonomialSpec) -> bool {
        self == other || *self == other.reciprocal()
    }

    /// Exact numerator and denominator products, no epsilon guard. This
    /// is the path verification uses so the guard cannot mask errors.
    pub fn evaluate_parts<T: Scalar>(&self, cols: &DerivativeColumns<T>) -> (T, T) {
        let product = |side: &[Triple]| {
            side.iter().fold(T::one(), |acc, t| {
                let (i, j, k) = t.indices();
                acc * crate::linalg::det3_cols(&cols[i], &cols[j], &cols[k])
            })
        };
        (product(&self.numerator), product(&self.denominator))
    }
}

impl fmt::Display for MonomialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |fac: &[Triple]| {
            fac.iter()
                .map(|t| format!("M{t}"))
                .collect::<Vec<_>>()
                .join("*")
        };
        write!(f, "{}/{}", side(&self.numerator), side(&self.denominator))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Squash {
    Tanh,
    None,
}

/// Evaluation settings: denominator guard and output squashing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantConfig<T> {
    pub epsilon: T,
    pub squash: Squash,
}

impl<T: Real> Default for InvariantConfig<T> {
    fn default() -> Self {
        InvariantConfig {
            epsilon: T::from_f64_lossy(1e-8),
            squash: Squash::Tanh,
        }
    }
}

impl<T: Real> InvariantConfig<T> {
    pub fn with_epsilon(epsilon: T) -> Self {
        InvariantConfig {
            epsilon,
            ..Self::default()
        }
    }
}

/// Guarded rational invariant at one frame:
/// `num / (den + copysign(epsilon, den))`. Spec validity is enforced by
/// the [`MonomialSpec`] constructor, so evaluation cannot fail.
pub fn rational_invariant<T: Real>(
    cols: &DerivativeColumns<T>,
    spec: &MonomialSpec,
    config: &InvariantConfig<T>,
) -> T {
    let (num, den) = spec.evaluate_parts(cols);
    num / guard_denominator(den, config.epsilon)
}

#[inline]
fn guard_denominator<T: Real>(den: T, epsilon: T) -> T {
    den + epsilon.copysign(den)
}

/// The fixed eight-component invariant vector, in the frozen channel
/// order `i1..i8`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantVector<T>(pub [T; 8]);

impl<T: Real> InvariantVector<T> {
    pub fn values(&self) -> &[T; 8] {
        &self.0
    }
}

type IndexTriples = &'static [(usize, usize, usize)];

const STDADI_SPEC_INDICES: [(IndexTriples, IndexTriples); 8] = [
    (&[(0, 2, 3)], &[(0, 1, 4)]),
    (&[(1, 2, 3)], &[(0, 2, 4)]),
    (&[(0, 3, 4)], &[(1, 2, 4)]),
    (&[(0, 1, 2), (0, 2, 3)], &[(0, 1, 3), (0, 1, 3)]),
    (&[(0, 1, 3), (1, 2, 3)], &[(0, 1, 4), (0, 1, 4)]),
    (&[(0, 2, 3), (1, 2, 4)], &[(1, 2, 3), (1, 2, 3)]),
    (&[(1, 2, 3), (1, 3, 4)], &[(1, 2, 4), (1, 2, 4)]),
    (&[(1, 2, 4), (2, 3, 4)], &[(1, 3, 4), (1, 3, 4)]),
];

/// The eight function ratios behind the feature vector, in channel
/// order. Three are degree 1, five are degree 2; all have order 4.
pub fn stdadi_specs() -> &'static [MonomialSpec; 8] {
    static SPECS: OnceLock<[MonomialSpec; 8]> = OnceLock::new();
    SPECS.get_or_init(|| {
        STDADI_SPEC_INDICES.map(|(num, den)| {
            MonomialSpec::from_indices(num, den).expect("built-in specs are valid")
        })
    })
}

/// Eight guarded invariants at one stack frame. No squashing here; that
/// happens at channel-augmentation time.
pub fn stdadi8_at<T: Real>(
    cols: &DerivativeColumns<T>,
    config: &InvariantConfig<T>,
) -> InvariantVector<T> {
    let specs = stdadi_specs();
    InvariantVector(std::array::from_fn(|n| {
        rational_invariant(cols, &specs[n], config)
    }))
}

/// Convenience wrapper indexing into a stack. Panics if `t` is out of
/// range, matching slice indexing.
pub fn stdadi8<T: Real>(
    stack: &DerivativeStack<T>,
    t: usize,
    config: &InvariantConfig<T>,
) -> InvariantVector<T> {
    stdadi8_at(stack.frame(t), config)
}

/// Hyperbolic-tangent squash kept strictly inside (-1, 1): saturated
/// values are pulled back to the nearest representable neighbor of the
/// bound, so an invariant of 1000 maps to just under 1.
pub fn squash_value<T: Real>(v: T) -> T {
    let one = T::one();
    let limit = one - T::epsilon() / (one + one);
    v.tanh().clamp(-limit, limit)
}

/// Concatenates raw coordinates (channels 0..2) with the squashed
/// invariant grid (channels 3..10). `invariants` is indexed
/// `(frame, joint, body, component)`; absent bodies come out zero in
/// every channel.
pub fn augment_channels(
    seq: &SkeletonSequence,
    invariants: ArrayView4<'_, f64>,
    config: &InvariantConfig<f64>,
) -> Result<FeatureTensor> {
    let frames = seq.frame_count();
    let joints = seq.joint_count();
    let bodies = seq.body_slots();
    if invariants.shape() != [frames, joints, bodies, 8] {
        return Err(Error::ShapeMismatch(format!(
            "invariant grid {:?} does not match sequence ({frames}, {joints}, {bodies}, 8)",
            invariants.shape()
        )));
    }
    // largest f32 strictly below 1
    let f32_limit = 1.0f32 - f32::EPSILON / 2.0;
    let mut data = Array4::<f32>::zeros((CHANNELS, frames, joints, bodies));
    for f in 0..frames {
        for b in 0..bodies {
            if !seq.is_present(f, b) {
                continue;
            }
            for j in 0..joints {
                for c in 0..3 {
                    data[[c, f, j, b]] = seq.positions()[[f, b, j, c]] as f32;
                }
                for n in 0..8 {
                    let raw = invariants[[f, j, b, n]];
                    let value = match config.squash {
                        Squash::Tanh => {
                            let squashed = squash_value(raw) as f32;
                            squashed.clamp(-f32_limit, f32_limit)
                        }
                        Squash::None => raw as f32,
                    };
                    data[[3 + n, f, j, b]] = value;
                }
            }
        }
    }
    FeatureTensor::new(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{
        differentiate_analytic, CoordinateModel, Sinusoid, TrajectoryModel,
    };
    use crate::transforms::{apply_dual_affine, random_transform, TransformBounds};
    use proptest::prelude::*;

    fn unit_columns() -> DerivativeColumns<f64> {
        // e1 at order 0, e2 at order 2, e3 at order 3, zeros elsewhere
        let mut cols = [[0.0; 3]; STACK_ORDERS];
        cols[0] = [1.0, 0.0, 0.0];
        cols[2] = [0.0, 1.0, 0.0];
        cols[3] = [0.0, 0.0, 1.0];
        cols
    }

    #[test]
    fn det_of_unit_columns_is_one() {
        let cols = unit_columns();
        assert_eq!(det_m(&cols, 0, 2, 3).unwrap(), 1.0);
        assert_eq!(det_m(&cols, 2, 0, 3).unwrap(), -1.0);
    }

    #[test]
    fn det_rejects_bad_indices() {
        let cols = unit_columns();
        assert!(matches!(
            det_m(&cols, 0, 0, 3),
            Err(Error::RepeatedIndex { .. })
        ));
        assert!(matches!(
            det_m(&cols, 0, 1, 5),
            Err(Error::OrderOutOfRange { order: 5, max: 4 })
        ));
    }

    #[test]
    fn det_matches_permutation_expansion_on_integer_stacks() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let cols: DerivativeColumns<f64> =
                std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-9i32..=9) as f64));
            let (i, j, k) = (
                rng.gen_range(0..5),
                rng.gen_range(0..5),
                rng.gen_range(0..5),
            );
            if i == j || j == k || i == k {
                continue;
            }
            let got = det_m(&cols, i, j, k).unwrap();
            // Leibniz expansion, written independently of the cofactor path
            let m = [cols[i], cols[j], cols[k]];
            let perms: [([usize; 3], f64); 6] = [
                ([0, 1, 2], 1.0),
                ([1, 2, 0], 1.0),
                ([2, 0, 1], 1.0),
                ([0, 2, 1], -1.0),
                ([1, 0, 2], -1.0),
                ([2, 1, 0], -1.0),
            ];
            let mut expect = 0.0;
            for (p, sign) in perms {
                expect += sign * m[p[0]][0] * m[p[1]][1] * m[p[2]][2];
            }
            // integer-valued entries: both routes are exact
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn spec_validation_enforces_structure() {
        // unequal factor counts
        assert!(MonomialSpec::from_indices(&[(0, 1, 2)], &[]).is_err());
        // order sums 3 vs 4: time scale would survive
        assert!(MonomialSpec::from_indices(&[(0, 1, 2)], &[(0, 1, 3)]).is_err());
        // non-increasing triple
        assert!(Triple::new(2, 1, 3).is_err());
        // a valid degenerate ratio (same factor both sides) is allowed
        // for evaluation, just not canonical for enumeration
        let s = MonomialSpec::from_indices(&[(0, 1, 2)], &[(0, 1, 2)]).unwrap();
        assert!(!s.is_canonical());
    }

    #[test]
    fn trivial_ratio_evaluates_to_one_over_one_plus_epsilon() {
        let cols = unit_columns();
        // det M012 on these columns: columns (e1, 0, e2) -> zero column,
        // so build a frame where M012 = identity instead
        let mut id = [[0.0; 3]; STACK_ORDERS];
        id[0] = [1.0, 0.0, 0.0];
        id[1] = [0.0, 1.0, 0.0];
        id[2] = [0.0, 0.0, 1.0];
        let spec = MonomialSpec::from_indices(&[(0, 1, 2)], &[(0, 1, 2)]).unwrap();
        let config = InvariantConfig::<f64>::default();
        let v = rational_invariant(&id, &spec, &config);
        assert!((v - 1.0 / (1.0 + 1e-8)).abs() < 1e-15);
        let _ = cols;
    }

    #[test]
    fn constant_trajectory_gives_zero_for_every_valid_spec() {
        let zero = [[0.0; 3]; STACK_ORDERS];
        let config = InvariantConfig::<f64>::default();
        for spec in stdadi_specs() {
            assert_eq!(rational_invariant(&zero, spec, &config), 0.0);
        }
        let v = stdadi8_at(&zero, &config);
        assert_eq!(v.0, [0.0; 8]);
    }

    #[test]
    fn guard_never_divides_by_zero_even_for_negative_denominators() {
        let eps = 1e-8;
        for den in [-1e-8f64, -5e-9, -0.0, 0.0, 5e-9, 1e-8] {
            let g = guard_denominator(den, eps);
            assert!(g.abs() >= eps * 0.99, "den {den} -> guard {g}");
        }
    }

    #[test]
    fn eight_specs_have_documented_degrees_and_orders() {
        let specs = stdadi_specs();
        let degrees: Vec<usize> = specs.iter().map(MonomialSpec::degree).collect();
        assert_eq!(degrees, [1, 1, 1, 2, 2, 2, 2, 2]);
        let orders: Vec<usize> = specs.iter().map(MonomialSpec::order).collect();
        assert_eq!(orders, [4, 4, 4, 3, 4, 4, 4, 4]);
        for s in specs.iter() {
            assert!(s.is_canonical() || s.reciprocal().is_canonical());
        }
    }

    /// Independent spelled-out evaluation of the eight ratios via a
    /// different determinant implementation (nalgebra), on exact
    /// closed-form derivatives.
    fn oracle_eight(cols: &DerivativeColumns<f64>) -> [f64; 8] {
        let d = |i: usize, j: usize, k: usize| -> f64 {
            nalgebra::Matrix3::from_columns(&[
                nalgebra::Vector3::from_column_slice(&cols[i]),
                nalgebra::Vector3::from_column_slice(&cols[j]),
                nalgebra::Vector3::from_column_slice(&cols[k]),
            ])
            .determinant()
        };
        [
            d(0, 2, 3) / d(0, 1, 4),
            d(1, 2, 3) / d(0, 2, 4),
            d(0, 3, 4) / d(1, 2, 4),
            d(0, 1, 2) * d(0, 2, 3) / (d(0, 1, 3) * d(0, 1, 3)),
            d(0, 1, 3) * d(1, 2, 3) / (d(0, 1, 4) * d(0, 1, 4)),
            d(0, 2, 3) * d(1, 2, 4) / (d(1, 2, 3) * d(1, 2, 3)),
            d(1, 2, 3) * d(1, 3, 4) / (d(1, 2, 4) * d(1, 2, 4)),
            d(1, 2, 4) * d(2, 3, 4) / (d(1, 3, 4) * d(1, 3, 4)),
        ]
    }

    fn bench_model() -> TrajectoryModel<f64> {
        TrajectoryModel::new([
            CoordinateModel::polynomial(vec![0.0, 1.0, 0.0, 0.0, 0.3]),
            CoordinateModel::polynomial(vec![0.0, 0.0, 1.0, -0.1]),
            CoordinateModel {
                coefficients: vec![],
                sinusoids: vec![Sinusoid {
                    amplitude: 1.0,
                    angular_frequency: 0.2,
                    phase: 0.0,
                }],
            },
        ])
    }

    #[test]
    fn stdadi8_matches_direct_substitution_of_exact_derivatives() {
        let model = bench_model();
        let grid: Vec<f64> = (0..32).map(|i| i as f64 * 0.125).collect();
        let stack = differentiate_analytic(&model, &grid).unwrap();
        // epsilon small enough not to disturb the comparison
        let config = InvariantConfig::with_epsilon(1e-300);
        for t in 5..27 {
            let got = stdadi8(&stack, t, &config);
            let want = oracle_eight(stack.frame(t));
            for n in 0..8 {
                let rel = (got.0[n] - want[n]).abs() / want[n].abs().max(1e-9);
                assert!(rel < 1e-12, "component {n} frame {t}: rel {rel}");
            }
        }
    }

    #[test]
    fn invariant_under_random_dual_affine_on_the_analytic_path() {
        let model = bench_model();
        let grid: Vec<f64> = (0..32).map(|i| i as f64 * 0.125).collect();
        let config = InvariantConfig::with_epsilon(1e-300);
        let sf = differentiate_analytic(&model, &grid).unwrap();
        for seed in 0..10u64 {
            let xf = random_transform::<f64>(seed, &TransformBounds::default()).unwrap();
            let g = apply_dual_affine(&model, &xf);
            let ugrid = xf.transformed_grid(&grid);
            let sg = differentiate_analytic(&g, &ugrid).unwrap();
            for t in 0..grid.len() {
                let specs = stdadi_specs();
                for (n, spec) in specs.iter().enumerate() {
                    let (_, df) = spec.evaluate_parts(sf.frame(t));
                    let (_, dg) = spec.evaluate_parts(sg.frame(t));
                    if df.abs().min(dg.abs()) <= 1e-6 {
                        continue;
                    }
                    let a = rational_invariant(sf.frame(t), spec, &config);
                    let b = rational_invariant(sg.frame(t), spec, &config);
                    let rel = (a - b).abs() / a.abs().max(1e-6);
                    assert!(rel < 1e-9, "seed {seed} frame {t} component {n}: rel {rel}");
                }
            }
        }
    }

    #[test]
    fn rational_parts_match_arbitrary_precision_reevaluation() {
        // Stacks with dyadic entries are exact in f64, so the same
        // products can be recomputed in exact rational arithmetic (via
        // an independent permutation-expansion determinant) and the f64
        // path must agree to near machine precision.
        use num::{BigRational, FromPrimitive, ToPrimitive};
        use rand::{Rng, SeedableRng};

        fn det3_exact(cols: &[[BigRational; 3]; 3]) -> BigRational {
            let perms: [([usize; 3], i32); 6] = [
                ([0, 1, 2], 1),
                ([1, 2, 0], 1),
                ([2, 0, 1], 1),
                ([0, 2, 1], -1),
                ([1, 0, 2], -1),
                ([2, 1, 0], -1),
            ];
            let mut acc = BigRational::from_integer(0.into());
            for (p, sign) in perms {
                let term = &cols[0][p[0]] * &cols[1][p[1]] * &cols[2][p[2]];
                acc += BigRational::from_integer(sign.into()) * term;
            }
            acc
        }

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2718);
        let specs = crate::enumeration::enumerate_specs(2, 4);
        for _ in 0..20 {
            let cols: DerivativeColumns<f64> = std::array::from_fn(|_| {
                std::array::from_fn(|_| rng.gen_range(-512i32..=512) as f64 / 64.0)
            });
            let exact_cols: [[BigRational; 3]; 5] = std::array::from_fn(|o| {
                std::array::from_fn(|c| BigRational::from_f64(cols[o][c]).unwrap())
            });
            let exact_parts = |side: &[Triple]| {
                side.iter().fold(BigRational::from_integer(1.into()), |acc, t| {
                    let (i, j, k) = t.indices();
                    acc * det3_exact(&[
                        exact_cols[i].clone(),
                        exact_cols[j].clone(),
                        exact_cols[k].clone(),
                    ])
                })
            };
            for spec in specs.iter().step_by(7).chain(stdadi_specs().iter()) {
                let (num, den) = spec.evaluate_parts(&cols);
                let exact_num = exact_parts(spec.numerator());
                let exact_den = exact_parts(spec.denominator());
                if exact_den == BigRational::from_integer(0.into()) {
                    continue;
                }
                let expect = (exact_num / exact_den).to_f64().unwrap();
                let got = num / den;
                let rel = (got - expect).abs() / expect.abs().max(1e-12);
                assert!(rel < 1e-12, "{spec}: {got} vs {expect} (rel {rel})");
            }
        }
    }

    #[test]
    fn reflections_leave_every_ratio_unchanged() {
        // det A = -1 flips the sign of every determinant factor; equal
        // factor counts on both sides cancel the flip exactly.
        use crate::linalg::Mat3;
        use crate::transforms::{push_forward_stack, DualAffine};
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let cols: DerivativeColumns<f64> =
            std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-2.0..2.0)));
        let stack = DerivativeStack::from_frames(vec![cols]);
        let mirror = Mat3([[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let xf = DualAffine::new(mirror, [0.0; 3], 1.0, 0.0).unwrap();
        assert!(xf.det_a() < 0.0);
        let pushed = push_forward_stack(&stack, &xf);
        for spec in stdadi_specs() {
            let (n1, d1) = spec.evaluate_parts(stack.frame(0));
            let (n2, d2) = spec.evaluate_parts(pushed.frame(0));
            if d1.abs() < 1e-9 {
                continue;
            }
            let rel = ((n2 / d2) - (n1 / d1)).abs() / (n1 / d1).abs().max(1e-12);
            assert!(rel < 1e-12, "{spec}: rel {rel}");
        }
    }

    fn tiny_sequence(frames: usize, joints: usize) -> SkeletonSequence {
        let mut positions = ndarray::Array4::<f64>::zeros((frames, 2, joints, 3));
        let mut present = ndarray::Array2::<bool>::from_elem((frames, 2), false);
        for f in 0..frames {
            present[[f, 0]] = true;
            for j in 0..joints {
                for c in 0..3 {
                    positions[[f, 0, j, c]] = (f * joints + j) as f64 * 0.01 + c as f64;
                }
            }
        }
        SkeletonSequence::from_parts(positions, present).unwrap()
    }

    #[test]
    fn augment_with_zero_invariants_zeroes_the_invariant_channels() {
        let seq = tiny_sequence(4, 3);
        let grid = Array4::<f64>::zeros((4, 3, 2, 8));
        let t = augment_channels(&seq, grid.view(), &InvariantConfig::default()).unwrap();
        for f in 0..4 {
            for j in 0..3 {
                for n in 3..11 {
                    assert_eq!(t.data()[[n, f, j, 0]], 0.0);
                }
                // coordinate channels come through bit-identically
                for c in 0..3 {
                    assert_eq!(
                        t.data()[[c, f, j, 0]],
                        seq.positions()[[f, 0, j, c]] as f32
                    );
                }
            }
        }
    }

    #[test]
    fn augment_rejects_mismatched_grids() {
        let seq = tiny_sequence(4, 3);
        let grid = Array4::<f64>::zeros((4, 2, 2, 8));
        assert!(matches!(
            augment_channels(&seq, grid.view(), &InvariantConfig::default()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn squash_saturates_strictly_inside_unit_interval() {
        let v = squash_value(1000.0f64);
        assert!(v < 1.0, "must stay below one");
        assert!(1.0 - v < 1e-9, "must be within 1e-9 of one");
        assert_eq!(squash_value(0.0f64), 0.0);
        let w = squash_value(-1000.0f64);
        assert!(w > -1.0 && (w + 1.0) < 1e-9);
    }

    proptest! {
        #[test]
        fn det_changes_sign_under_any_transposition(
            entries in proptest::array::uniform15(-10.0f64..10.0),
        ) {
            let mut cols = [[0.0; 3]; STACK_ORDERS];
            for (e, v) in entries.iter().enumerate() {
                cols[e / 3][e % 3] = *v;
            }
            let base = det_m(&cols, 0, 2, 4).unwrap();
            prop_assert!((det_m(&cols, 2, 0, 4).unwrap() + base).abs() < 1e-12 * base.abs().max(1.0));
            prop_assert!((det_m(&cols, 0, 4, 2).unwrap() + base).abs() < 1e-12 * base.abs().max(1.0));
            prop_assert!((det_m(&cols, 4, 2, 0).unwrap() + base).abs() < 1e-12 * base.abs().max(1.0));
        }

        #[test]
        fn exact_ratio_is_unchanged_by_positive_scaling(
            entries in proptest::array::uniform15(-4.0f64..4.0),
            scale in 1e-3f64..1e3,
        ) {
            let mut cols = [[0.0; 3]; STACK_ORDERS];
            for (e, v) in entries.iter().enumerate() {
                cols[e / 3][e % 3] = *v;
            }
            let scaled: DerivativeColumns<f64> =
                std::array::from_fn(|o| std::array::from_fn(|c| cols[o][c] * scale));
            // a determinant tiny relative to its column norms amplifies the
            // scaling rounding past 1e-12; the exact-arithmetic identity is
            // only testable on conditioned factors
            let well_conditioned = |cols: &DerivativeColumns<f64>, spec: &MonomialSpec| {
                spec.numerator()
                    .iter()
                    .chain(spec.denominator())
                    .all(|t| {
                        let (i, j, k) = t.indices();
                        let det = crate::linalg::det3_cols(&cols[i], &cols[j], &cols[k]);
                        let vol = crate::linalg::norm3(&cols[i])
                            * crate::linalg::norm3(&cols[j])
                            * crate::linalg::norm3(&cols[k]);
                        det.abs() > 1e-3 * vol.max(f64::MIN_POSITIVE)
                    })
            };
            for spec in stdadi_specs() {
                if !well_conditioned(&cols, spec) {
                    continue;
                }
                let (n1, d1) = spec.evaluate_parts(&cols);
                let (n2, d2) = spec.evaluate_parts(&scaled);
                let (r1, r2) = (n1 / d1, n2 / d2);
                prop_assert!(
                    (r1 - r2).abs() <= 1e-12 * r1.abs().max(1e-12),
                    "{spec}: {r1} vs {r2}"
                );
            }
        }
    }
}
