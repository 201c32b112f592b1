//! Huber GM estimators solved by iteratively reweighted least squares.
//!
//! Each iteration fixes `q_k = ψ(u_k)/u_k` at the standardized residuals
//! `u_k = r_k / (s w_k)` and solves the weighted least-squares problem.
//! That step minimizes a quadratic majorizer of the Huber objective, so
//! at a fixed scale the objective cannot increase. The scale is then
//! re-estimated from the new residuals but never allowed to grow, and
//! the recorded objective is `G = s² Σ_k w_k² ρ(u_k)`, which is
//! nondecreasing in `s`; together this makes every trace monotone.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::config::HuberConfig;
use super::direct::{rank_warning, truncated_basis};
use super::estimate::{Method, Operator, OperatorEstimate, Residuals};
use super::huber::{huber_q, huber_rho, robust_scale};
use crate::error::{RdmdError, Result};
use crate::linalg::{lstsq, pinv, ridge_operator_fit, weighted_row_fit};
use crate::robust_stats::OutlierReport;
use crate::snapshots::SnapshotPair;

/// `s² Σ_k w_k² ρ(r_k / (s w_k))`.
fn scaled_objective(mags: &[f64], w: &[f64], s: f64, delta: f64) -> f64 {
    mags.iter()
        .zip(w)
        .map(|(&r, &wk)| s * s * wk * wk * huber_rho(r / (s * wk), delta))
        .sum()
}

fn irls_weights(mags: &[f64], w: &[f64], s: f64, delta: f64) -> Vec<f64> {
    mags.iter().zip(w).map(|(&r, &wk)| huber_q(r / (s * wk), delta)).collect()
}

/// Scale bookkeeping shared by all variants.
struct ScaleTrack {
    s: f64,
    bm: f64,
    frozen: bool,
    floored: bool,
}

impl ScaleTrack {
    fn start(mags: &[f64], cfg: &HuberConfig) -> Self {
        let r = robust_scale(mags, cfg.bm);
        ScaleTrack {
            s: r.value,
            bm: cfg.bm,
            frozen: cfg.freeze_scale,
            floored: r.floored,
        }
    }

    fn update(&mut self, mags: &[f64]) {
        if self.frozen {
            return;
        }
        let r = robust_scale(mags, self.bm);
        self.floored |= r.floored;
        self.s = self.s.min(r.value);
    }
}

fn check_inputs(pair: &SnapshotPair, cfg: &HuberConfig, report: &OutlierReport) -> Result<()> {
    cfg.validate()?;
    if report.len() != pair.len() {
        return Err(RdmdError::MalformedInput(format!(
            "outlier report has {} weights for {} snapshot pairs",
            report.len(),
            pair.len()
        )));
    }
    if report.weights.iter().any(|&w| !(w > 0.0 && w <= 1.0)) {
        return Err(RdmdError::Domain("weights must lie in (0, 1]".into()));
    }
    Ok(())
}

fn scale_warning(warnings: &mut Vec<String>) {
    let msg = "residual scale hit its floor; the fit is (nearly) exact".to_string();
    log::warn!("{msg}");
    warnings.push(msg);
}

fn finish(
    method: Method,
    operator: Operator,
    pair: &SnapshotPair,
    cfg: &HuberConfig,
    report: &OutlierReport,
    progress: Progress,
    mut warnings: Vec<String>,
) -> OperatorEstimate {
    if !progress.converged {
        let msg = format!("IRLS did not converge within {} iterations", cfg.max_iter);
        log::warn!("{msg}");
        warnings.push(msg);
    }
    OperatorEstimate {
        method,
        operator,
        dt: pair.dt(),
        iterations: progress.iterations,
        converged: progress.converged,
        scale: Some(progress.scale),
        weights: Some(report.clone()),
        objective_trace: progress.trace,
        config: Some(*cfg),
        warnings,
    }
}

struct Progress {
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    scale: f64,
}

/// N-RDMD: Huber loss on residual norms, one matrix IRLS.
pub fn nrdmd(pair: &SnapshotPair, cfg: &HuberConfig, report: &OutlierReport) -> Result<OperatorEstimate> {
    check_inputs(pair, cfg, report)?;
    let w = &report.weights;
    let mut warnings = Vec::new();
    let init = lstsq(pair.y().transpose(), &pair.yp().transpose());
    let mut rank_low = init.rank < pair.dim();
    let mut a = init.x.transpose();
    let mut res = Residuals::of(pair, &a);
    let mut scale = ScaleTrack::start(&res.norms, cfg);
    let mut trace = vec![scaled_objective(&res.norms, w, scale.s, cfg.delta)];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        let q = irls_weights(&res.norms, w, scale.s, cfg.delta);
        let fit = ridge_operator_fit(pair.y(), pair.yp(), &q, 0.0);
        rank_low |= fit.rank < pair.dim();
        let step = (&fit.x - &a).norm();
        a = fit.x;
        res = Residuals::of(pair, &a);
        scale.update(&res.norms);
        trace.push(scaled_objective(&res.norms, w, scale.s, cfg.delta));
        iterations += 1;
        if step <= cfg.irls_tol {
            converged = true;
            break;
        }
    }
    if rank_low {
        warnings.push(rank_warning(init.rank, pair.dim()));
    }
    if scale.floored {
        scale_warning(&mut warnings);
    }
    let progress = Progress { trace, iterations, converged, scale: scale.s };
    Ok(finish(Method::Nrdmd, Operator::Full(a), pair, cfg, report, progress, warnings))
}

struct RowFit {
    row: DVector<f64>,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    scale: f64,
    floored: bool,
    rank: usize,
}

fn krdmd_row(
    y: &DMatrix<f64>,
    target: &DVector<f64>,
    start: DVector<f64>,
    w: &[f64],
    cfg: &HuberConfig,
) -> RowFit {
    let resid = |a: &DVector<f64>| -> Vec<f64> {
        let pred = y.tr_mul(a);
        target.iter().zip(pred.iter()).map(|(t, p)| t - p).collect()
    };
    let mut a = start;
    let mut r = resid(&a);
    let mut scale = ScaleTrack::start(&r, cfg);
    let mut trace = vec![scaled_objective(&r, w, scale.s, cfg.delta)];
    let mut iterations = 0;
    let mut converged = false;
    let mut rank = y.nrows();
    while iterations < cfg.max_iter {
        let q = irls_weights(&r, w, scale.s, cfg.delta);
        let fit = weighted_row_fit(y, target, &q);
        rank = rank.min(fit.rank);
        let next = fit.x.column(0).into_owned();
        let step = (&next - &a).norm();
        a = next;
        r = resid(&a);
        scale.update(&r);
        trace.push(scaled_objective(&r, w, scale.s, cfg.delta));
        iterations += 1;
        if step <= cfg.irls_tol {
            converged = true;
            break;
        }
    }
    RowFit {
        row: a,
        trace,
        iterations,
        converged,
        scale: scale.s,
        floored: scale.floored,
        rank,
    }
}

/// K-RDMD: Huber loss on residual components, one IRLS per row of `Â`.
///
/// Rows are solved in parallel. The reported trace is the sum of the row
/// objectives, a row that stopped early contributing its final value.
pub fn krdmd(pair: &SnapshotPair, cfg: &HuberConfig, report: &OutlierReport) -> Result<OperatorEstimate> {
    check_inputs(pair, cfg, report)?;
    let m = pair.dim();
    let w = &report.weights;
    let init = lstsq(pair.y().transpose(), &pair.yp().transpose());
    let y = pair.y();
    let rows: Vec<RowFit> = (0..m)
        .into_par_iter()
        .map(|i| {
            let target = pair.yp().row(i).transpose();
            let start = init.x.column(i).into_owned();
            krdmd_row(y, &target, start, w, cfg)
        })
        .collect();

    let iterations = rows.iter().map(|r| r.iterations).max().unwrap_or(0);
    let trace = (0..=iterations)
        .map(|t| rows.iter().map(|r| r.trace[t.min(r.trace.len() - 1)]).sum())
        .collect();
    let mut a = DMatrix::zeros(m, m);
    for (i, r) in rows.iter().enumerate() {
        a.row_mut(i).copy_from(&r.row.transpose());
    }
    let mut warnings = Vec::new();
    let rank = rows.iter().map(|r| r.rank).min().unwrap_or(m).min(init.rank);
    if rank < m {
        warnings.push(rank_warning(rank, m));
    }
    if rows.iter().any(|r| r.floored) {
        scale_warning(&mut warnings);
    }
    let progress = Progress {
        trace,
        iterations,
        converged: rows.iter().all(|r| r.converged),
        scale: rows.iter().map(|r| r.scale).fold(0.0, f64::max),
    };
    Ok(finish(Method::Krdmd, Operator::Full(a), pair, cfg, report, progress, warnings))
}

/// Reduced robust DMD on the coordinates `T⁺y`.
///
/// The Tikhonov constant is relative: `γ² = gamma · tr(T⁺YYᵀT⁺ᵀ) / c′`.
/// Residuals, and hence the weights, live in the full space.
pub fn robust_standard_dmd(
    pair: &SnapshotPair,
    t: &DMatrix<f64>,
    cfg: &HuberConfig,
    report: &OutlierReport,
) -> Result<OperatorEstimate> {
    check_inputs(pair, cfg, report)?;
    let m = pair.dim();
    let c = t.ncols();
    if t.nrows() != m {
        return Err(RdmdError::MalformedInput(format!(
            "transform has {} rows for state dimension {m}",
            t.nrows()
        )));
    }
    if c == 0 || c >= m {
        return Err(RdmdError::RobustnessCondition { reduced: c, state: m });
    }
    let t_pinv = pinv(t);
    let x = &t_pinv * pair.y();
    let xp = &t_pinv * pair.yp();
    let gamma_sq = cfg.gamma * x.norm_squared() / c as f64;
    let w = &report.weights;
    let penalty = |a: &DMatrix<f64>| 0.5 * gamma_sq * a.norm_squared();
    let residual_norms = |a: &DMatrix<f64>| -> Vec<f64> {
        let r = pair.yp() - t * (a * &x);
        r.column_iter().map(|col| col.norm()).collect()
    };

    let mut warnings = Vec::new();
    let init = ridge_operator_fit(&x, &xp, &vec![1.0; pair.len()], gamma_sq);
    let mut rank_low = init.rank < c;
    let mut a = init.x;
    let mut norms = residual_norms(&a);
    let mut scale = ScaleTrack::start(&norms, cfg);
    let mut trace = vec![scaled_objective(&norms, w, scale.s, cfg.delta) + penalty(&a)];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        let q = irls_weights(&norms, w, scale.s, cfg.delta);
        let fit = ridge_operator_fit(&x, &xp, &q, gamma_sq);
        rank_low |= fit.rank < c;
        let step = (&fit.x - &a).norm();
        a = fit.x;
        norms = residual_norms(&a);
        scale.update(&norms);
        trace.push(scaled_objective(&norms, w, scale.s, cfg.delta) + penalty(&a));
        iterations += 1;
        if step <= cfg.irls_tol {
            converged = true;
            break;
        }
    }
    if rank_low {
        warnings.push(rank_warning(init.rank, c));
    }
    if scale.floored {
        scale_warning(&mut warnings);
    }
    let progress = Progress { trace, iterations, converged, scale: scale.s };
    let operator = Operator::Reduced { a_tilde: a, t: t.clone(), t_pinv };
    Ok(finish(Method::RobustStandard, operator, pair, cfg, report, progress, warnings))
}

/// `robust_standard_dmd` with `T` the leading `rank` left singular vectors of `Y`.
pub fn robust_standard_dmd_svd(
    pair: &SnapshotPair,
    rank: usize,
    cfg: &HuberConfig,
    report: &OutlierReport,
) -> Result<OperatorEstimate> {
    if rank >= pair.dim() {
        return Err(RdmdError::RobustnessCondition { reduced: rank, state: pair.dim() });
    }
    let (u, _, _) = truncated_basis(pair.y(), rank)?;
    robust_standard_dmd(pair, &u, cfg, report)
}
