use nalgebra::DMatrix;

use super::estimate::{Method, Operator, OperatorEstimate};
use crate::error::{RdmdError, Result};
use crate::linalg::{lstsq, numerical_rank, thin_svd, RCOND};
use crate::snapshots::SnapshotPair;

fn check_nonempty(pair: &SnapshotPair) -> Result<()> {
    if pair.is_empty() || pair.dim() == 0 {
        return Err(RdmdError::InsufficientData("snapshot pair has no columns".into()));
    }
    Ok(())
}

pub(crate) fn rank_warning(rank: usize, m: usize) -> String {
    let msg = format!(
        "snapshot matrix has numerical rank {rank} < {m}; returning the minimum-norm least-squares operator"
    );
    log::warn!("{msg}");
    msg
}

/// Least-squares fit `Â = Y′Y⁺`, solved through an SVD of `Yᵀ`.
pub fn exact_dmd(pair: &SnapshotPair) -> Result<OperatorEstimate> {
    check_nonempty(pair)?;
    let sol = lstsq(pair.y().transpose(), &pair.yp().transpose());
    let mut warnings = Vec::new();
    if sol.rank < pair.dim() {
        warnings.push(rank_warning(sol.rank, pair.dim()));
    }
    Ok(OperatorEstimate::direct(
        Method::Dmd,
        Operator::Full(sol.x.transpose()),
        pair.dt(),
        warnings,
    ))
}

/// Leading `rank` left singular vectors of `Y`, checked against the
/// numerical rank.
pub fn truncated_basis(y: &DMatrix<f64>, rank: usize) -> Result<(DMatrix<f64>, DMatrix<f64>, Vec<f64>)> {
    let (m, n) = y.shape();
    if rank == 0 || rank > m.min(n) {
        return Err(RdmdError::Config(format!(
            "rank must lie in 1..={}, got {rank}",
            m.min(n)
        )));
    }
    let svd = thin_svd(y);
    let numerical = numerical_rank(&svd.sigma);
    if rank > numerical {
        return Err(RdmdError::Truncation { requested: rank, numerical });
    }
    let u = svd.u.columns(0, rank).into_owned();
    let v = svd.v_t.rows(0, rank).transpose();
    let sigma = svd.sigma.rows(0, rank).iter().copied().collect();
    Ok((u, v, sigma))
}

/// Projected operator `Ã = Uᵀ Y′ V Σ⁻¹` on the leading `rank` POD modes.
pub fn standard_dmd(pair: &SnapshotPair, rank: usize) -> Result<OperatorEstimate> {
    check_nonempty(pair)?;
    let (u, v, sigma) = truncated_basis(pair.y(), rank)?;
    let mut yv = pair.yp() * v;
    for (j, s) in sigma.iter().enumerate() {
        debug_assert!(*s > RCOND * sigma[0]);
        yv.column_mut(j).unscale_mut(*s);
    }
    let a_tilde = u.transpose() * yv;
    Ok(OperatorEstimate::direct(
        Method::Standard,
        Operator::reduced(a_tilde, u),
        pair.dt(),
        Vec::new(),
    ))
}
