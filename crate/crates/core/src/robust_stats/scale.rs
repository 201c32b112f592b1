//! Robust scale estimators.
//!
//! `mad`/`scale_s1` is the normal-consistent median absolute deviation.
//! `scale_s2` is the nested low-median of pairwise distances,
//!
//! ```text
//! s2 = 1.1926 · lomed_k ( lomed_{j≠k} |p_k − p_j| )
//! ```
//!
//! evaluated in `O(n log n)`: after sorting, the distances from `p_k` to
//! the points on its left and on its right form two increasing sequences,
//! and the inner low median is a rank query on their merge. The naive
//! double loop is kept as [`scale_s2_naive`]; both produce bit-identical
//! results because every distance is the same IEEE subtraction.

use serde::{Deserialize, Serialize};

use super::location::{check_finite_nonempty, lomed_in_place, median_in_place, select};
use crate::error::{RdmdError, Result};

/// Consistency factor of the MAD at the normal distribution.
pub const MAD_FACTOR: f64 = 1.4826;
/// Consistency factor of the pairwise low-median scale.
pub const S2_FACTOR: f64 = 1.1926;

/// Which scale estimator standardizes projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ScaleEstimatorKind {
    /// Median absolute deviation, `ŝ₁`.
    #[serde(rename = "s1")]
    MadS1,
    /// Pairwise low-median scale, `ŝ₂`.
    #[default]
    #[serde(rename = "s2")]
    QnS2,
}

impl ScaleEstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            ScaleEstimatorKind::MadS1 => "s1",
            ScaleEstimatorKind::QnS2 => "s2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "s1" | "mad" => Some(ScaleEstimatorKind::MadS1),
            "s2" | "qn" => Some(ScaleEstimatorKind::QnS2),
            _ => None,
        }
    }

    pub fn estimate(self, xs: &[f64]) -> Result<f64> {
        match self {
            ScaleEstimatorKind::MadS1 => scale_s1(xs),
            ScaleEstimatorKind::QnS2 => scale_s2(xs),
        }
    }
}

pub(crate) fn mad_in_place(xs: &mut [f64]) -> f64 {
    let med = median_in_place(xs);
    for x in xs.iter_mut() {
        *x = (*x - med).abs();
    }
    MAD_FACTOR * median_in_place(xs)
}

/// `1.4826 · median |x_k − median(xs)|`.
pub fn mad(xs: &[f64]) -> Result<f64> {
    check_finite_nonempty(xs, "mad")?;
    Ok(mad_in_place(&mut xs.to_vec()))
}

/// MAD of projected values `p_kᵀ v`.
pub fn scale_s1(projections: &[f64]) -> Result<f64> {
    check_finite_nonempty(projections, "scale s1")?;
    Ok(mad_in_place(&mut projections.to_vec()))
}

fn check_s2(xs: &[f64]) -> Result<()> {
    if xs.len() < 2 {
        return Err(RdmdError::Domain(format!(
            "scale s2 needs at least 2 values, got {}",
            xs.len()
        )));
    }
    check_finite_nonempty(xs, "scale s2")
}

/// Pairwise low-median scale, fast path.
pub fn scale_s2(projections: &[f64]) -> Result<f64> {
    check_s2(projections)?;
    let mut sorted = projections.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(s2_sorted(&sorted))
}

/// Fast path on already-sorted input of length ≥ 2.
pub(crate) fn s2_sorted(x: &[f64]) -> f64 {
    let n = x.len();
    // lomed of the n−1 distances from each point: rank ⌊n/2⌋ (1-based)
    let rank = n / 2;
    let mut inner: Vec<f64> = (0..n).map(|k| kth_distance(x, k, rank)).collect();
    S2_FACTOR * lomed_in_place(&mut inner)
}

/// `rank`-th smallest (1-based) of `{x[k] − x[k−1−i]} ∪ {x[j+k+1] − x[k]}`.
fn kth_distance(x: &[f64], k: usize, rank: usize) -> f64 {
    let left_len = k;
    let right_len = x.len() - 1 - k;
    let left = |i: usize| x[k] - x[k - 1 - i];
    let right = |j: usize| x[k + 1 + j] - x[k];

    let mut lo = rank.saturating_sub(right_len);
    let mut hi = rank.min(left_len);
    loop {
        let i = (lo + hi) / 2;
        let j = rank - i;
        if i < left_len && j > 0 && right(j - 1) > left(i) {
            lo = i + 1;
        } else if i > 0 && j < right_len && left(i - 1) > right(j) {
            hi = i - 1;
        } else {
            let a = if i > 0 { left(i - 1) } else { f64::NEG_INFINITY };
            let b = if j > 0 { right(j - 1) } else { f64::NEG_INFINITY };
            return a.max(b);
        }
    }
}

/// Reference double loop for `scale_s2`.
pub fn scale_s2_naive(projections: &[f64]) -> Result<f64> {
    check_s2(projections)?;
    let n = projections.len();
    let mut inner = Vec::with_capacity(n);
    let mut row = Vec::with_capacity(n - 1);
    for (k, &pk) in projections.iter().enumerate() {
        row.clear();
        row.extend(
            projections
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &pj)| (pk - pj).abs()),
        );
        inner.push(lomed_in_place(&mut row));
    }
    let idx = n.div_ceil(2) - 1;
    Ok(S2_FACTOR * select(&mut inner, idx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mad_examples() {
        assert_relative_eq!(mad(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap(), 1.4826, epsilon = 1e-15);
        assert_eq!(mad(&[3.0; 6]).unwrap(), 0.0);
        assert!(mad(&[]).is_err());
    }

    #[test]
    fn s1_examples() {
        assert_eq!(scale_s1(&[2.0; 4]).unwrap(), 0.0);
        assert_relative_eq!(scale_s1(&[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap(), 1.4826, epsilon = 1e-15);
    }

    #[test]
    fn s2_examples() {
        assert_relative_eq!(scale_s2(&[0.0, 1.0]).unwrap(), 1.1926, epsilon = 1e-15);
        assert_eq!(scale_s2(&[4.0; 7]).unwrap(), 0.0);
        assert!(scale_s2(&[1.0]).is_err());
        assert!(scale_s2_naive(&[1.0]).is_err());
    }

    #[test]
    fn s2_one_to_five_by_hand() {
        // distances from 1: {1,2,3,4} → lomed 2; from 2: {1,1,2,3} → 1;
        // from 3: {2,1,1,2} → 1; from 4: {3,2,1,1} → 1; from 5: {4,3,2,1} → 2.
        // outer lomed of {2,1,1,1,2} is 1.
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_relative_eq!(scale_s2_naive(&xs).unwrap(), 1.1926, epsilon = 1e-15);
        assert_eq!(scale_s2(&xs).unwrap(), scale_s2_naive(&xs).unwrap());
    }

    #[test]
    fn fast_s2_equals_naive_up_to_500() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in (2..=60).chain([99, 100, 257, 500]) {
            for _ in 0..3 {
                let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
                assert_eq!(scale_s2(&xs).unwrap(), scale_s2_naive(&xs).unwrap(), "n = {n}");
                // heavy ties
                let ties: Vec<f64> = (0..n).map(|_| rng.gen_range(0..4) as f64).collect();
                assert_eq!(scale_s2(&ties).unwrap(), scale_s2_naive(&ties).unwrap(), "ties n = {n}");
            }
        }
    }

    proptest! {
        #[test]
        fn fast_s2_matches_naive(xs in prop::collection::vec(-1e3f64..1e3, 2..80)) {
            prop_assert_eq!(scale_s2(&xs).unwrap(), scale_s2_naive(&xs).unwrap());
        }

        #[test]
        fn scales_are_translation_invariant_and_homogeneous(
            xs in prop::collection::vec(-10f64..10.0, 2..50),
            shift in -10f64..10.0,
            c in prop_oneof![-5f64..-0.1, 0.1f64..5.0],
        ) {
            let moved: Vec<f64> = xs.iter().map(|x| x + shift).collect();
            let scaled: Vec<f64> = xs.iter().map(|x| c * x).collect();
            for kind in [ScaleEstimatorKind::MadS1, ScaleEstimatorKind::QnS2] {
                let base = kind.estimate(&xs).unwrap();
                let tol = 1e-9 * (1.0 + base);
                prop_assert!((kind.estimate(&moved).unwrap() - base).abs() <= tol);
                prop_assert!((kind.estimate(&scaled).unwrap() - c.abs() * base).abs() <= tol * c.abs());
            }
        }

        #[test]
        fn scales_are_permutation_invariant(xs in prop::collection::vec(-10f64..10.0, 2..50)) {
            let mut rev = xs.clone();
            rev.reverse();
            prop_assert_eq!(mad(&rev).unwrap(), mad(&xs).unwrap());
            prop_assert_eq!(scale_s2(&rev).unwrap(), scale_s2(&xs).unwrap());
        }
    }
}
