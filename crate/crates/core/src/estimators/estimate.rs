use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::config::HuberConfig;
use crate::error::{RdmdError, Result};
use crate::linalg::pinv;
use crate::robust_stats::OutlierReport;
use crate::snapshots::SnapshotPair;

/// Operator identification method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dmd,
    Standard,
    Krdmd,
    Nrdmd,
    RobustStandard,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Dmd,
        Method::Standard,
        Method::Krdmd,
        Method::Nrdmd,
        Method::RobustStandard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dmd => "dmd",
            Method::Standard => "standard",
            Method::Krdmd => "krdmd",
            Method::Nrdmd => "nrdmd",
            Method::RobustStandard => "robust-standard",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn is_robust(self) -> bool {
        matches!(self, Method::Krdmd | Method::Nrdmd | Method::RobustStandard)
    }

    pub fn is_reduced(self) -> bool {
        matches!(self, Method::Standard | Method::RobustStandard)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A full operator `Â`, or a reduced `Ã` acting on coordinates `T⁺x`.
#[derive(Debug, Clone, PartialEq)]
pub enum Operator {
    Full(DMatrix<f64>),
    Reduced {
        a_tilde: DMatrix<f64>,
        t: DMatrix<f64>,
        t_pinv: DMatrix<f64>,
    },
}

impl Operator {
    pub fn reduced(a_tilde: DMatrix<f64>, t: DMatrix<f64>) -> Self {
        let t_pinv = pinv(&t);
        Operator::Reduced { a_tilde, t, t_pinv }
    }

    /// The matrix whose spectrum is reported: `Â` or `Ã`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        match self {
            Operator::Full(a) => a,
            Operator::Reduced { a_tilde, .. } => a_tilde,
        }
    }

    pub fn transform(&self) -> Option<&DMatrix<f64>> {
        match self {
            Operator::Full(_) => None,
            Operator::Reduced { t, .. } => Some(t),
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            Operator::Full(a) => a.nrows(),
            Operator::Reduced { t, .. } => t.nrows(),
        }
    }

    /// Full-space one-step map: `Â` or `T Ã T⁺`.
    pub fn full(&self) -> DMatrix<f64> {
        match self {
            Operator::Full(a) => a.clone(),
            Operator::Reduced { a_tilde, t, t_pinv } => t * a_tilde * t_pinv,
        }
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Operator::Full(a) => a * x,
            Operator::Reduced { a_tilde, t, t_pinv } => t * (a_tilde * (t_pinv * x)),
        }
    }
}

/// Result of an operator fit plus IRLS diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "EstimateRepr", try_from = "EstimateRepr")]
pub struct OperatorEstimate {
    pub method: Method,
    pub operator: Operator,
    pub dt: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final robust scale (per row for K-RDMD this is the largest one).
    pub scale: Option<f64>,
    pub weights: Option<OutlierReport>,
    pub objective_trace: Vec<f64>,
    pub config: Option<HuberConfig>,
    pub warnings: Vec<String>,
}

impl OperatorEstimate {
    pub(crate) fn direct(method: Method, operator: Operator, dt: f64, warnings: Vec<String>) -> Self {
        OperatorEstimate {
            method,
            operator,
            dt,
            iterations: 0,
            converged: true,
            scale: None,
            weights: None,
            objective_trace: Vec::new(),
            config: None,
            warnings,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.operator.matrix()
    }

    pub fn full_operator(&self) -> DMatrix<f64> {
        self.operator.full()
    }

    pub fn state_dim(&self) -> usize {
        self.operator.state_dim()
    }
}

/// Row-major matrix as stored in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for MatrixJson {
    fn from(m: &DMatrix<f64>) -> Self {
        MatrixJson {
            shape: [m.nrows(), m.ncols()],
            data: m.transpose().iter().copied().collect(),
        }
    }
}

impl TryFrom<MatrixJson> for DMatrix<f64> {
    type Error = RdmdError;

    fn try_from(j: MatrixJson) -> Result<Self> {
        let [r, c] = j.shape;
        if j.data.len() != r * c {
            return Err(RdmdError::MalformedInput(format!(
                "matrix shape {r}x{c} does not match {} entries",
                j.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(r, c, &j.data))
    }
}

#[derive(Serialize, Deserialize)]
struct EstimateRepr {
    method: Method,
    dt: f64,
    matrix: MatrixJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transform: Option<MatrixJson>,
    iterations: usize,
    converged: bool,
    scale: Option<f64>,
    objective_trace: Vec<f64>,
    weights: Option<OutlierReport>,
    config: Option<HuberConfig>,
    #[serde(default)]
    warnings: Vec<String>,
}

impl From<OperatorEstimate> for EstimateRepr {
    fn from(e: OperatorEstimate) -> Self {
        EstimateRepr {
            method: e.method,
            dt: e.dt,
            matrix: e.operator.matrix().into(),
            transform: e.operator.transform().map(Into::into),
            iterations: e.iterations,
            converged: e.converged,
            scale: e.scale,
            objective_trace: e.objective_trace,
            weights: e.weights,
            config: e.config,
            warnings: e.warnings,
        }
    }
}

impl TryFrom<EstimateRepr> for OperatorEstimate {
    type Error = RdmdError;

    fn try_from(r: EstimateRepr) -> Result<Self> {
        let a: DMatrix<f64> = r.matrix.try_into()?;
        let operator = match r.transform {
            None => {
                if a.nrows() != a.ncols() {
                    return Err(RdmdError::MalformedInput("operator matrix is not square".into()));
                }
                Operator::Full(a)
            }
            Some(t) => {
                let t: DMatrix<f64> = t.try_into()?;
                if a.nrows() != a.ncols() || t.ncols() != a.nrows() {
                    return Err(RdmdError::MalformedInput(
                        "reduced operator and transform shapes disagree".into(),
                    ));
                }
                Operator::reduced(a, t)
            }
        };
        Ok(OperatorEstimate {
            method: r.method,
            operator,
            dt: r.dt,
            iterations: r.iterations,
            converged: r.converged,
            scale: r.scale,
            weights: r.weights,
            objective_trace: r.objective_trace,
            config: r.config,
            warnings: r.warnings,
        })
    }
}

/// One-step residuals `r_k = y_{k+1} − A y_k` and their norms.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub r: DMatrix<f64>,
    pub norms: Vec<f64>,
}

impl Residuals {
    pub fn of(pair: &SnapshotPair, a: &DMatrix<f64>) -> Self {
        let r = pair.yp() - a * pair.y();
        let norms = r.column_iter().map(|c| c.norm()).collect();
        Residuals { r, norms }
    }

    /// Least-squares cost `½ Σ_k ‖r_k‖²`.
    pub fn ls_cost(&self) -> f64 {
        0.5 * self.r.norm_squared()
    }
}
