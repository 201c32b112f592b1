//! Eigenvalues and modes of an estimated operator, state reconstruction
//! and reconstruction error metrics.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{RdmdError, Result};
use crate::estimators::OperatorEstimate;
use crate::linalg::all_finite;
use crate::snapshots::{render_csv, write_text, TimeSeries};

/// Relative tolerance under which two eigenvalue magnitudes count as tied.
const MAGNITUDE_TIE: f64 = 1e-12;

/// Eigenvalues (discrete and continuous time) and modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub dt: f64,
    pub eig_discrete: Vec<Complex64>,
    /// `ln(λ)/dt` on the principal branch; `None` for `λ = 0`.
    pub eig_continuous: Vec<Option<Complex64>>,
    /// Eigenvectors as columns, in full state coordinates.
    pub modes: DMatrix<Complex64>,
}

/// Eigen-decomposition of `est`, using the estimate's sampling step.
pub fn spectrum(est: &OperatorEstimate) -> Result<Spectrum> {
    spectrum_at(est, est.dt)
}

/// Eigen-decomposition of `est` with an explicit sampling step.
pub fn spectrum_at(est: &OperatorEstimate, dt: f64) -> Result<Spectrum> {
    spectrum_of(est.matrix(), est.operator.transform(), dt)
}

/// Eigen-decomposition of `a`; reduced eigenvectors are lifted by `t`.
pub fn spectrum_of(a: &DMatrix<f64>, t: Option<&DMatrix<f64>>, dt: f64) -> Result<Spectrum> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(RdmdError::Domain(format!("dt must be positive, got {dt}")));
    }
    if !a.is_square() {
        return Err(RdmdError::Domain("operator matrix is not square".into()));
    }
    if !all_finite(a) {
        return Err(RdmdError::Domain("operator has non-finite entries".into()));
    }
    let eig = sorted_eigenvalues(a)?;
    let vecs = eigenvectors(a, &eig);
    let modes = match t {
        Some(t) => t.map(|v| Complex64::new(v, 0.0)) * vecs,
        None => vecs,
    };
    let eig_continuous = eig.iter().map(|&l| to_continuous(l, dt)).collect();
    Ok(Spectrum {
        dt,
        eig_discrete: eig,
        eig_continuous,
        modes,
    })
}

/// `ln(λ)/dt` on the principal branch.
pub fn to_continuous(lambda: Complex64, dt: f64) -> Option<Complex64> {
    if lambda == Complex64::new(0.0, 0.0) {
        return None;
    }
    let c = lambda.ln() / dt;
    debug_assert!(c.im.abs() <= std::f64::consts::PI / dt * (1.0 + 1e-12));
    Some(c)
}

fn sorted_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 10_000 * n.max(1))
        .ok_or_else(|| RdmdError::Domain("eigenvalue iteration did not converge".into()))?;
    let mut eig: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|x, y| y.norm().total_cmp(&x.norm()).then(y.im.total_cmp(&x.im)));
    // within runs of (nearly) equal magnitude, order by imaginary part
    let mut start = 0;
    while start < eig.len() {
        let mut end = start + 1;
        while end < eig.len() {
            let (a, b) = (eig[end - 1].norm(), eig[end].norm());
            if a - b > MAGNITUDE_TIE * a.max(f64::MIN_POSITIVE) {
                break;
            }
            end += 1;
        }
        eig[start..end].sort_by(|x, y| y.im.total_cmp(&x.im).then(y.re.total_cmp(&x.re)));
        start = end;
    }
    Ok(eig)
}

/// Unit eigenvectors by shifted inverse iteration.
fn eigenvectors(a: &DMatrix<f64>, eig: &[Complex64]) -> DMatrix<Complex64> {
    let n = a.nrows();
    let ac = a.map(|v| Complex64::new(v, 0.0));
    let scale = a.norm().max(1.0);
    let mut out = DMatrix::zeros(n, eig.len());
    for (j, &lambda) in eig.iter().enumerate() {
        // distinct deterministic starts so repeated eigenvalues get
        // different vectors from their eigenspace
        let mut v = DVector::from_fn(n, |i, _| {
            Complex64::new(1.0 + ((i * 7 + j * 13) % 11) as f64 / 11.0, ((i + 3 * j) % 5) as f64 / 7.0)
        });
        v.unscale_mut(v.norm());
        let mut shift = 1e-10 * scale;
        for _ in 0..4 {
            let mut m = ac.clone();
            for i in 0..n {
                m[(i, i)] -= lambda + Complex64::new(shift, 0.0);
            }
            let lu = m.lu();
            let mut next = v.clone();
            if !lu.solve_mut(&mut next) || next.iter().any(|z| !z.is_finite()) {
                shift *= 10.0;
                continue;
            }
            let norm = next.norm();
            if norm == 0.0 {
                break;
            }
            v = next.unscale(norm);
        }
        // fix the phase so the largest entry is real and positive
        let (imax, _) = v.iter().enumerate().fold((0, 0.0), |acc, (i, z)| {
            if z.norm() > acc.1 {
                (i, z.norm())
            } else {
                acc
            }
        });
        let phase = v[imax] / v[imax].norm();
        if phase.is_finite() {
            v = v.map(|z| z / phase);
        }
        out.set_column(j, &v);
    }
    out
}

/// Amplitudes `b` minimizing `‖Φ b − x0‖` over the modes `Φ`.
pub fn mode_amplitudes(spec: &Spectrum, x0: &DVector<f64>) -> Result<Vec<Complex64>> {
    if spec.modes.nrows() != x0.len() {
        return Err(RdmdError::Domain(format!(
            "initial state has dimension {}, modes have {}",
            x0.len(),
            spec.modes.nrows()
        )));
    }
    if spec.modes.ncols() == 0 {
        return Ok(Vec::new());
    }
    let rhs = DMatrix::from_fn(x0.len(), 1, |i, _| Complex64::new(x0[i], 0.0));
    let svd = spec.modes.clone().svd(true, true);
    let cutoff = crate::linalg::RCOND * svd.singular_values.max();
    let b = svd
        .solve(&rhs, cutoff)
        .map_err(|e| RdmdError::Domain(e.to_string()))?;
    Ok(b.iter().copied().collect())
}

/// Complex number as stored in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(c: Complex64) -> Self {
        ComplexJson { re: c.re, im: c.im }
    }
}

impl From<ComplexJson> for Complex64 {
    fn from(c: ComplexJson) -> Self {
        Complex64::new(c.re, c.im)
    }
}

/// Serialized eigenvalue lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumJson {
    pub dt: f64,
    pub eig_discrete: Vec<ComplexJson>,
    pub eig_continuous: Vec<Option<ComplexJson>>,
}

impl From<&Spectrum> for SpectrumJson {
    fn from(s: &Spectrum) -> Self {
        SpectrumJson {
            dt: s.dt,
            eig_discrete: s.eig_discrete.iter().map(|&c| c.into()).collect(),
            eig_continuous: s.eig_continuous.iter().map(|c| c.map(Into::into)).collect(),
        }
    }
}

/// How the reconstruction advances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconstructionMode {
    /// `x̂_{k+1} = A x̂_k` from the initial state.
    FreeRun,
    /// `x̂_{k+1} = A x_k` from the true previous state.
    OneStep,
}

impl ReconstructionMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "free_run" | "free-run" => Some(ReconstructionMode::FreeRun),
            "one_step" | "one-step" => Some(ReconstructionMode::OneStep),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ReconstructionMode::FreeRun => "free_run",
            ReconstructionMode::OneStep => "one_step",
        }
    }
}

/// Reconstructed trajectory and, when a truth was given, its running error.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub trajectory: TimeSeries,
    pub cumulative_error: Option<Vec<f64>>,
    pub mode: ReconstructionMode,
}

impl ReconstructionResult {
    pub fn final_error(&self) -> Option<f64> {
        self.cumulative_error.as_ref().and_then(|c| c.last().copied())
    }

    /// CSV in the snapshot format, plus `cum_err` when available.
    pub fn to_csv(&self) -> String {
        match &self.cumulative_error {
            Some(c) => render_csv(&self.trajectory, &[("cum_err", c)]),
            None => render_csv(&self.trajectory, &[]),
        }
    }

    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        write_text(path, &self.to_csv())
    }
}

/// Propagates `est` for `steps` steps from `x0`.
pub fn reconstruct(
    est: &OperatorEstimate,
    x0: &DVector<f64>,
    steps: usize,
    mode: ReconstructionMode,
    truth: Option<&TimeSeries>,
) -> Result<ReconstructionResult> {
    let m = est.state_dim();
    if steps == 0 {
        return Err(RdmdError::Domain("reconstruction needs at least one step".into()));
    }
    if x0.len() != m {
        return Err(RdmdError::Domain(format!(
            "initial state has dimension {}, operator acts on {m}",
            x0.len()
        )));
    }
    if let Some(tr) = truth {
        if tr.dim() != m {
            return Err(RdmdError::Domain(format!(
                "truth has dimension {}, operator acts on {m}",
                tr.dim()
            )));
        }
        if tr.len() < steps + 1 {
            return Err(RdmdError::Domain(format!(
                "truth has {} samples, {} needed",
                tr.len(),
                steps + 1
            )));
        }
    }
    let a = est.full_operator();
    let mut traj = Vec::with_capacity(steps + 1);
    traj.push(x0.clone());
    for k in 0..steps {
        let prev = match (mode, truth) {
            (ReconstructionMode::FreeRun, _) => &traj[k],
            (ReconstructionMode::OneStep, Some(tr)) => &tr.samples()[k],
            (ReconstructionMode::OneStep, None) => {
                return Err(RdmdError::Domain("one-step reconstruction needs a truth series".into()))
            }
        };
        let next = &a * prev;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(RdmdError::Divergence { step: k + 1 });
        }
        traj.push(next);
    }
    let t0 = truth.map_or(0.0, |t| t.t0());
    let dt = truth.map_or(est.dt, |t| t.dt());
    let mut trajectory = TimeSeries::with_start(t0, dt, traj)?;
    if let Some(labels) = truth.and_then(|t| t.labels()) {
        trajectory = trajectory.with_labels(labels.to_vec())?;
    }
    let cumulative_error = truth.map(|tr| cumulative_error(&trajectory, tr));
    Ok(ReconstructionResult {
        trajectory,
        cumulative_error,
        mode,
    })
}

/// Running sum of `‖x̂_i − x_i‖₂` over the common length.
pub fn cumulative_error(estimate: &TimeSeries, truth: &TimeSeries) -> Vec<f64> {
    let mut acc = 0.0;
    estimate
        .samples()
        .iter()
        .zip(truth.samples())
        .map(|(a, b)| {
            acc += (a - b).norm();
            acc
        })
        .collect()
}

/// Root-mean-square entrywise error over the common length.
pub fn rms_error(estimate: &TimeSeries, truth: &TimeSeries) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (a, b) in estimate.samples().iter().zip(truth.samples()) {
        sum += (a - b).norm_squared();
        count += a.len();
    }
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).sqrt()
    }
}
