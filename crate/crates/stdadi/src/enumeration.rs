//! Enumeration of candidate rational invariants and a numerical
//! function-independence audit.
//!
//! Canonicalization used here (each choice removes functionally
//! redundant candidates, and the combination makes the count
//! reproducible):
//!
//! * factors are sorted triples `i < j < k` (sign convention),
//! * numerator and denominator are sorted multisets of equal size,
//! * equal summed orders on both sides (homogeneity),
//! * no factor appears on both sides (it would cancel),
//! * a ratio and its reciprocal count once, keeping the
//!   lexicographically smaller side as numerator.
//!
//! Under these rules the degree <= 2, order <= 4 family has exactly 111
//! members (3 of degree 1, 108 of degree 2). Other published tallies of
//! the same family (notably 55) rest on a different, unstated
//! deduplication convention; the count here is reproducible from the
//! rules above.

use crate::invariant::{MonomialSpec, Triple};
use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// All canonical specs with `degree <= max_degree` and derivative
/// orders `<= max_order`, in a deterministic (degree, numerator,
/// denominator) order.
///
/// `max_degree >= 1` and `2 <= max_order <= 4` are required; stacks
/// carry derivative orders 0..4 only.
pub fn enumerate_specs(max_degree: usize, max_order: usize) -> Vec<MonomialSpec> {
    assert!(max_degree >= 1, "max_degree must be at least 1");
    assert!(
        (2..=4).contains(&max_order),
        "max_order must be between 2 and 4"
    );
    let triples: Vec<Triple> = (0..=max_order)
        .tuple_combinations()
        .map(|(i, j, k)| Triple::new(i, j, k).expect("combinations are increasing"))
        .collect();

    let mut out = Vec::new();
    for degree in 1..=max_degree {
        let sides: Vec<Vec<Triple>> = triples
            .iter()
            .copied()
            .combinations_with_replacement(degree)
            .collect();
        for (ni, num) in sides.iter().enumerate() {
            let num_sum: usize = num.iter().map(Triple::order_sum).sum();
            for den in sides.iter().skip(ni + 1) {
                let den_sum: usize = den.iter().map(Triple::order_sum).sum();
                if num_sum != den_sum {
                    continue;
                }
                if num.iter().any(|t| den.contains(t)) {
                    continue;
                }
                let spec = MonomialSpec::new(num.clone(), den.clone())
                    .expect("enumerated sides satisfy the constraints");
                debug_assert!(spec.is_canonical());
                out.push(spec);
            }
        }
    }
    out
}

/// Outcome of the Jacobian-rank independence audit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankReport {
    pub trials: usize,
    /// Numerical rank per trial.
    pub ranks: Vec<usize>,
    /// Most frequent rank (ties broken toward the larger rank).
    pub modal_rank: usize,
    /// Number of degenerate sample stacks that had to be redrawn.
    pub resamples: usize,
}

/// Numerically audits function independence of `specs`.
///
/// Per trial, a generic stack frame is drawn (15 free entries, standard
/// normal; entry `e` maps to order `e / 3`, coordinate `e % 3`), the
/// Jacobian of the exact spec ratios with respect to those entries is
/// formed by central differences (relative step 1e-6), and the rank is
/// read off the singular values with threshold `1e-8 * sigma_max`.
/// Stacks where any spec's denominator magnitude falls below 1e-6 are
/// redrawn and counted in `resamples`.
pub fn independence_rank(specs: &[MonomialSpec], trials: usize, seed: u64) -> RankReport {
    assert!(trials >= 1, "need at least one trial");
    assert!(!specs.is_empty(), "need at least one spec");
    let mut ranks = Vec::with_capacity(trials);
    let mut resamples = 0usize;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let entries = loop {
            let candidate: [f64; 15] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
            let cols = columns_from_entries(&candidate);
            let degenerate = specs.iter().any(|s| {
                let (_, den) = s.evaluate_parts(&cols);
                den.abs() < 1e-6
            });
            if !degenerate {
                break candidate;
            }
            resamples += 1;
        };
        ranks.push(jacobian_rank(specs, &entries));
    }
    let modal_rank = modal(&ranks);
    RankReport {
        trials,
        ranks,
        modal_rank,
        resamples,
    }
}

fn columns_from_entries(entries: &[f64; 15]) -> crate::spline::DerivativeColumns<f64> {
    std::array::from_fn(|order| std::array::from_fn(|coord| entries[order * 3 + coord]))
}

fn spec_values(specs: &[MonomialSpec], entries: &[f64; 15]) -> Vec<f64> {
    let cols = columns_from_entries(entries);
    specs
        .iter()
        .map(|s| {
            let (num, den) = s.evaluate_parts(&cols);
            num / den
        })
        .collect()
}

fn jacobian_rank(specs: &[MonomialSpec], entries: &[f64; 15]) -> usize {
    let m = specs.len();
    let mut jac = nalgebra::DMatrix::<f64>::zeros(m, 15);
    for e in 0..15 {
        let h = 1e-6 * entries[e].abs().max(1.0);
        let mut plus = *entries;
        plus[e] += h;
        let mut minus = *entries;
        minus[e] -= h;
        let vp = spec_values(specs, &plus);
        let vm = spec_values(specs, &minus);
        for s in 0..m {
            jac[(s, e)] = (vp[s] - vm[s]) / (2.0 * h);
        }
    }
    let sv = jac.svd(false, false).singular_values;
    let max_sv = sv.iter().cloned().fold(0.0f64, f64::max);
    if max_sv == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-8 * max_sv).count()
}

fn modal(ranks: &[usize]) -> usize {
    let mut counts = std::collections::BTreeMap::new();
    for &r in ranks {
        *counts.entry(r).or_insert(0usize) += 1;
    }
    counts
        .into_iter()
        .max_by_key(|&(rank, count)| (count, rank))
        .map(|(rank, _)| rank)
        .unwrap_or(0)
}
