use serde::{Deserialize, Serialize};

use crate::error::{RdmdError, Result};

/// Tuning of the Huber GM estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HuberConfig {
    /// Huber corner; values between 1 and 3 are customary.
    pub delta: f64,
    /// Weight cutoff for projection statistics.
    pub b: f64,
    /// IRLS stops once the Frobenius norm of the update is at most this.
    pub irls_tol: f64,
    pub max_iter: usize,
    /// Scale correction factor `b_m`.
    pub bm: f64,
    /// Relative Tikhonov constant of the reduced estimator.
    pub gamma: f64,
    /// Keep the scale from the least-squares start instead of updating it.
    pub freeze_scale: bool,
}

impl Default for HuberConfig {
    fn default() -> Self {
        HuberConfig {
            delta: 1.5,
            b: 1.5,
            irls_tol: 0.01,
            max_iter: 50,
            bm: 1.0,
            gamma: 1e-6,
            freeze_scale: false,
        }
    }
}

impl HuberConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("delta", self.delta),
            ("b", self.b),
            ("irls_tol", self.irls_tol),
            ("bm", self.bm),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RdmdError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iter == 0 {
            return Err(RdmdError::Config("max_iter must be at least 1".into()));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(RdmdError::Config(format!("gamma must be nonnegative, got {}", self.gamma)));
        }
        Ok(())
    }
}
