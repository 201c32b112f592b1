use crate::error::{RdmdError, Result};

fn check(xs: &[f64], what: &str) -> Result<()> {
    if xs.is_empty() {
        return Err(RdmdError::Domain(format!("{what} of an empty list")));
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(RdmdError::Domain(format!("{what} of non-finite values")));
    }
    Ok(())
}

/// `k`-th smallest element (0-based). Reorders `xs`.
pub(crate) fn select(xs: &mut [f64], k: usize) -> f64 {
    let (_, v, _) = xs.select_nth_unstable_by(k, f64::total_cmp);
    *v
}

/// Median of a nonempty buffer, reordering it.
pub(crate) fn median_in_place(xs: &mut [f64]) -> f64 {
    let n = xs.len();
    let hi = select(xs, n / 2);
    if n % 2 == 1 {
        hi
    } else {
        // the lower half now holds everything below `hi`
        let lo = xs[..n / 2].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// Low median of a nonempty buffer: the `⌊(n+1)/2⌋`-th order statistic.
pub(crate) fn lomed_in_place(xs: &mut [f64]) -> f64 {
    let n = xs.len();
    select(xs, n.div_ceil(2) - 1)
}

/// Sample median; the mean of the two central values for even length.
pub fn median(xs: &[f64]) -> Result<f64> {
    check(xs, "median")?;
    Ok(median_in_place(&mut xs.to_vec()))
}

/// Low median: for odd length the median, for even length the lower of
/// the two central values.
pub fn lomed(xs: &[f64]) -> Result<f64> {
    check(xs, "low median")?;
    Ok(lomed_in_place(&mut xs.to_vec()))
}

pub(crate) fn check_finite_nonempty(xs: &[f64], what: &str) -> Result<()> {
    check(xs, what)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn median_examples() {
        assert_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.5);
        assert_eq!(median(&[5.0; 5]).unwrap(), 5.0);
        assert!(median(&[]).is_err());
    }

    #[test]
    fn lomed_examples() {
        assert_eq!(lomed(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.0);
        assert_eq!(lomed(&[7.0]).unwrap(), 7.0);
        assert_eq!(lomed(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap(), 3.0);
        assert!(lomed(&[]).is_err());
    }

    fn sorted(xs: &[f64]) -> Vec<f64> {
        let mut v = xs.to_vec();
        v.sort_by(f64::total_cmp);
        v
    }

    proptest! {
        #[test]
        fn median_matches_sorting(xs in prop::collection::vec(-1e6f64..1e6, 1..60)) {
            let s = sorted(&xs);
            let n = s.len();
            let expect = if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) };
            prop_assert_eq!(median(&xs).unwrap(), expect);
            prop_assert_eq!(lomed(&xs).unwrap(), s[(n + 1) / 2 - 1]);
        }

        #[test]
        fn location_is_translation_equivariant(
            xs in prop::collection::vec(-100f64..100.0, 1..40),
            shift in -100f64..100.0,
        ) {
            let moved: Vec<f64> = xs.iter().map(|x| x + shift).collect();
            // translation commutes with order statistics exactly
            prop_assert_eq!(lomed(&moved).unwrap(), lomed(&xs).unwrap() + shift);
            let dm = median(&moved).unwrap() - (median(&xs).unwrap() + shift);
            prop_assert!(dm.abs() <= 1e-9);
        }

        #[test]
        fn location_is_permutation_invariant(xs in prop::collection::vec(-1e3f64..1e3, 1..40)) {
            let mut rev = xs.clone();
            rev.reverse();
            prop_assert_eq!(median(&rev).unwrap(), median(&xs).unwrap());
            prop_assert_eq!(lomed(&rev).unwrap(), lomed(&xs).unwrap());
        }
    }
}
