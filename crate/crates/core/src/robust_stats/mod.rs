//! Robust location and scale, projection statistics and snapshot weights.

mod location;
mod mahalanobis;
mod projection;
mod scale;
mod weights;

pub use location::{lomed, median};
pub use mahalanobis::mahalanobis;
pub use projection::{coordinate_median, direction_set, projection_statistics, ProjectionStatistics};
pub use scale::{mad, scale_s1, scale_s2, scale_s2_naive, ScaleEstimatorKind, MAD_FACTOR, S2_FACTOR};
pub use weights::{
    chi2_quantile, outlier_report, outlier_report_for_points, weights_from_ps, OutlierConfig,
    OutlierReport, DEFAULT_B, DEFAULT_QUANTILE,
};

pub(crate) use location::median_in_place;
