//! Operator identification: least squares, SVD projection and the robust
//! Huber GM estimators.

mod config;
mod direct;
mod estimate;
mod huber;
mod irls;

pub use config::HuberConfig;
pub use direct::{exact_dmd, standard_dmd, truncated_basis};
pub use estimate::{MatrixJson, Method, Operator, OperatorEstimate, Residuals};
pub use huber::{huber_psi, huber_q, huber_rho, robust_scale, RobustScale};
pub use irls::{krdmd, nrdmd, robust_standard_dmd, robust_standard_dmd_svd};

use crate::error::Result;
use crate::linalg::{numerical_rank, thin_svd};
use crate::robust_stats::{outlier_report, OutlierConfig, OutlierReport, ScaleEstimatorKind};
use crate::snapshots::SnapshotPair;

/// Everything a fit needs besides the data.
#[derive(Debug, Clone, Default)]
pub struct FitOptions {
    pub huber: HuberConfig,
    pub scale: ScaleEstimatorKind,
    /// Flagging dof; defaults to the dimension of the stacked transitions.
    pub dof: Option<usize>,
    pub quantile: Option<f64>,
    /// Reduced order for `standard` and `robust-standard`.
    pub rank: Option<usize>,
    /// Skip outlier scoring and use unit weights.
    pub unit_weights: bool,
}

impl FitOptions {
    pub fn outlier_config(&self) -> OutlierConfig {
        OutlierConfig {
            b: self.huber.b,
            quantile: self.quantile.unwrap_or(crate::robust_stats::DEFAULT_QUANTILE),
            dof: self.dof,
            scale: self.scale,
        }
    }

    /// Weights for a robust fit of `pair`.
    pub fn report(&self, pair: &SnapshotPair) -> Result<OutlierReport> {
        if self.unit_weights {
            Ok(OutlierReport::unit(pair.len()))
        } else {
            outlier_report(pair, &self.outlier_config())
        }
    }
}

/// Default reduced order: the numerical rank of `Y`, kept below the state
/// dimension for the robust reduced method.
pub fn default_rank(pair: &SnapshotPair, method: Method) -> usize {
    let rank = numerical_rank(&thin_svd(pair.y()).sigma).max(1);
    if method == Method::RobustStandard {
        rank.min(pair.dim().saturating_sub(1)).max(1)
    } else {
        rank
    }
}

/// Runs `method` on `pair`, scoring outliers first when the method is robust.
pub fn fit(pair: &SnapshotPair, method: Method, opts: &FitOptions) -> Result<OperatorEstimate> {
    let rank = || opts.rank.unwrap_or_else(|| default_rank(pair, method));
    match method {
        Method::Dmd => exact_dmd(pair),
        Method::Standard => standard_dmd(pair, rank()),
        Method::Krdmd => krdmd(pair, &opts.huber, &opts.report(pair)?),
        Method::Nrdmd => nrdmd(pair, &opts.huber, &opts.report(pair)?),
        Method::RobustStandard => {
            let r = rank();
            robust_standard_dmd_svd(pair, r, &opts.huber, &opts.report(pair)?)
        }
    }
}

/// Same as [`fit`] with a precomputed weight report.
pub fn fit_with_report(
    pair: &SnapshotPair,
    method: Method,
    opts: &FitOptions,
    report: &OutlierReport,
) -> Result<OperatorEstimate> {
    match method {
        Method::Krdmd => krdmd(pair, &opts.huber, report),
        Method::Nrdmd => nrdmd(pair, &opts.huber, report),
        Method::RobustStandard => {
            let r = opts.rank.unwrap_or_else(|| default_rank(pair, method));
            robust_standard_dmd_svd(pair, r, &opts.huber, report)
        }
        _ => fit(pair, method, opts),
    }
}
