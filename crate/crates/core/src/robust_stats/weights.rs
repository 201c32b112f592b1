use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::projection::projection_statistics;
use super::scale::ScaleEstimatorKind;
use crate::error::{RdmdError, Result};
use crate::snapshots::SnapshotPair;

/// Default weight cutoff `b`.
pub const DEFAULT_B: f64 = 1.5;
/// Default chi-square quantile for flagging.
pub const DEFAULT_QUANTILE: f64 = 0.975;

/// Inverse CDF of the chi-square distribution with `dof` degrees of freedom.
pub fn chi2_quantile(quantile: f64, dof: usize) -> Result<f64> {
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(RdmdError::Domain(format!("quantile {quantile} outside (0, 1)")));
    }
    if dof == 0 {
        return Err(RdmdError::Domain("chi-square needs dof >= 1".into()));
    }
    let dist = ChiSquared::new(dof as f64).map_err(|e| RdmdError::Domain(e.to_string()))?;
    Ok(dist.inverse_cdf(quantile))
}

/// Per-snapshot outlyingness, weights and flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub d_ps: Vec<f64>,
    pub weights: Vec<f64>,
    pub flags: Vec<bool>,
    pub threshold: f64,
    pub dof: usize,
    pub b: f64,
    pub scale_estimator: Option<ScaleEstimatorKind>,
}

impl OutlierReport {
    /// Report with every weight equal to one and nothing flagged.
    pub fn unit(n: usize) -> Self {
        OutlierReport {
            d_ps: vec![0.0; n],
            weights: vec![1.0; n],
            flags: vec![false; n],
            threshold: chi2_quantile(DEFAULT_QUANTILE, 1).expect("valid quantile"),
            dof: 1,
            b: DEFAULT_B,
            scale_estimator: None,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn flagged(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags.iter().enumerate().filter(|(_, &f)| f).map(|(k, _)| k)
    }
}

/// `w_k = min(1, b / d_k²)` and `flag_k = d_k² > χ²⁻¹(quantile; dof)`.
pub fn weights_from_ps(d_ps: &[f64], b: f64, dof: usize, quantile: f64) -> Result<OutlierReport> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(RdmdError::Domain(format!("weight cutoff b must be positive, got {b}")));
    }
    if let Some(bad) = d_ps.iter().find(|d| !(**d >= 0.0) || !d.is_finite()) {
        return Err(RdmdError::Domain(format!(
            "projection statistics must be finite and nonnegative, got {bad}"
        )));
    }
    let threshold = chi2_quantile(quantile, dof)?;
    let weights = d_ps
        .iter()
        .map(|&d| {
            let d2 = d * d;
            if d2 <= b {
                1.0
            } else {
                b / d2
            }
        })
        .collect();
    let flags = d_ps.iter().map(|&d| d * d > threshold).collect();
    Ok(OutlierReport {
        d_ps: d_ps.to_vec(),
        weights,
        flags,
        threshold,
        dof,
        b,
        scale_estimator: None,
    })
}

/// How outliers are scored before estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierConfig {
    pub b: f64,
    pub quantile: f64,
    /// Flagging dof; `None` means the dimension of the scored points.
    pub dof: Option<usize>,
    pub scale: ScaleEstimatorKind,
}

impl Default for OutlierConfig {
    fn default() -> Self {
        OutlierConfig {
            b: DEFAULT_B,
            quantile: DEFAULT_QUANTILE,
            dof: None,
            scale: ScaleEstimatorKind::QnS2,
        }
    }
}

/// Scores arbitrary points (columns) and converts to weights.
pub fn outlier_report_for_points(points: &DMatrix<f64>, cfg: &OutlierConfig) -> Result<OutlierReport> {
    let ps = projection_statistics(points, cfg.scale)?;
    let dof = cfg.dof.unwrap_or(points.nrows());
    let mut report = weights_from_ps(&ps.d_ps, cfg.b, dof, cfg.quantile)?;
    report.scale_estimator = Some(cfg.scale);
    Ok(report)
}

/// Scores the stacked transitions `[y_k; y_{k+1}]` of a snapshot pair.
pub fn outlier_report(pair: &SnapshotPair, cfg: &OutlierConfig) -> Result<OutlierReport> {
    outlier_report_for_points(&pair.stacked(), cfg)
}
