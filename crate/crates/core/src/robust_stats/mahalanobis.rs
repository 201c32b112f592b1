use nalgebra::{DMatrix, DVector};

use crate::error::{RdmdError, Result};

/// Classical Mahalanobis distance of every column from the sample mean,
/// using the unbiased sample covariance.
///
/// Not robust; kept as a baseline for the projection statistics, which
/// also remain defined when the covariance is singular.
pub fn mahalanobis(points: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (m, n) = points.shape();
    if m == 0 {
        return Err(RdmdError::MalformedInput("points have dimension 0".into()));
    }
    if n <= m {
        return Err(RdmdError::InsufficientData(format!(
            "Mahalanobis distance needs more points ({n}) than dimensions ({m})"
        )));
    }
    let mean: DVector<f64> = points.column_mean();
    let mut centered = points.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let cov = (&centered * centered.transpose()) / (n as f64 - 1.0);
    let chol = cov.cholesky().ok_or_else(|| {
        RdmdError::RankDeficient(
            "sample covariance is singular; use projection statistics instead".into(),
        )
    })?;
    Ok(centered
        .column_iter()
        .map(|c| {
            let z = chol.solve(&c.into_owned());
            c.dot(&z).max(0.0).sqrt()
        })
        .collect())
}
