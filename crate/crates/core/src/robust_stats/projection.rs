//! Projection statistics.
//!
//! Each point is projected on the directions `v_k = p_k − v_med` running
//! from the coordinate-wise median through every sample point. Along each
//! direction the projections are centred by their median and scaled by a
//! robust scale; the statistic of a point is its largest standardized
//! projection.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::location::median_in_place;
use super::scale::{mad_in_place, s2_sorted, ScaleEstimatorKind};
use crate::error::{RdmdError, Result};

/// Coordinate-wise median of the columns of `points`.
pub fn coordinate_median(points: &DMatrix<f64>) -> DVector<f64> {
    let mut buf = Vec::with_capacity(points.ncols());
    DVector::from_iterator(
        points.nrows(),
        points.row_iter().map(|row| {
            buf.clear();
            buf.extend(row.iter().copied());
            median_in_place(&mut buf)
        }),
    )
}

/// Directions `p_k − v_med` through the coordinate-wise median, one per
/// column of `points`; exact zeros are dropped and nothing is normalized.
pub fn direction_set(points: &DMatrix<f64>) -> Result<Vec<DVector<f64>>> {
    validate(points, 1)?;
    let med = coordinate_median(points);
    Ok(points
        .column_iter()
        .map(|p| p - &med)
        .filter(|v| v.iter().any(|&x| x != 0.0))
        .collect())
}

fn validate(points: &DMatrix<f64>, min_points: usize) -> Result<()> {
    if points.nrows() == 0 {
        return Err(RdmdError::MalformedInput("points have dimension 0".into()));
    }
    if points.ncols() < min_points {
        return Err(RdmdError::InsufficientData(format!(
            "need at least {min_points} points, got {}",
            points.ncols()
        )));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(RdmdError::Domain("points contain non-finite entries".into()));
    }
    Ok(())
}

/// Projection statistics together with bookkeeping about skipped directions.
#[derive(Debug, Clone)]
pub struct ProjectionStatistics {
    pub d_ps: Vec<f64>,
    pub directions: usize,
    pub skipped: usize,
}

impl ProjectionStatistics {
    /// True when every direction had zero scale.
    pub fn degenerate(&self) -> bool {
        self.directions == self.skipped
    }
}

/// `d_ps,k = max_v |p_kᵀv − med_j(p_jᵀv)| / ŝ(v)` for each column `p_k`.
///
/// Directions are processed in parallel; the per-point maximum is
/// reduced elementwise, which is exact and order-independent.
pub fn projection_statistics(
    points: &DMatrix<f64>,
    scale: ScaleEstimatorKind,
) -> Result<ProjectionStatistics> {
    validate(points, 3)?;
    let n = points.ncols();
    let directions = direction_set(points)?;
    let pts_t = points.transpose();

    let partials = directions.par_iter().map(|v| {
        let proj: Vec<f64> = (&pts_t * v).iter().copied().collect();
        let mut buf = proj.clone();
        let (center, s) = match scale {
            ScaleEstimatorKind::MadS1 => {
                let center = median_in_place(&mut buf);
                (center, mad_in_place(&mut buf))
            }
            ScaleEstimatorKind::QnS2 => {
                buf.sort_unstable_by(f64::total_cmp);
                let mid = n / 2;
                let center = if n % 2 == 1 {
                    buf[mid]
                } else {
                    0.5 * (buf[mid - 1] + buf[mid])
                };
                (center, s2_sorted(&buf))
            }
        };
        if s > 0.0 {
            Some(proj.into_iter().map(|p| (p - center).abs() / s).collect::<Vec<f64>>())
        } else {
            None
        }
    });

    let (d_ps, used) = partials
        .map(|opt| match opt {
            Some(v) => (v, 1usize),
            None => (vec![0.0; n], 0),
        })
        .reduce(
            || (vec![0.0; n], 0),
            |(mut a, ca), (b, cb)| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = x.max(y);
                }
                (a, ca + cb)
            },
        );

    let stats = ProjectionStatistics {
        d_ps,
        directions: directions.len(),
        skipped: directions.len() - used,
    };
    if stats.degenerate() {
        log::warn!("degenerate data: every projection direction has zero scale");
    }
    Ok(stats)
}
