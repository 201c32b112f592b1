//! Time series and the shifted snapshot matrices `Y`, `Y′`.
//!
//! A column is one time instant. `Y` holds `y_0 … y_{N−1}` and `Y′` holds
//! `y_1 … y_N`, so column `j` of `Y′` equals column `j + 1` of `Y` whenever
//! both come from one contiguous series.
//!
//! CSV layout: a header `t,x1,...,xm` followed by one row per sample. The
//! time column must increase with constant spacing (relative tolerance
//! `1e-9`); the spacing defines `dt`. Values are written with 17
//! significant digits so a write/read cycle is lossless.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{RdmdError, Result};

const SPACING_RTOL: f64 = 1e-9;

/// Sampled measurements `y_0 … y_N` at a fixed step.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    dt: f64,
    t0: f64,
    samples: Vec<DVector<f64>>,
    labels: Option<Vec<String>>,
}

impl TimeSeries {
    /// Builds a validated series starting at `t = 0`.
    pub fn new(dt: f64, samples: Vec<DVector<f64>>) -> Result<Self> {
        Self::with_start(0.0, dt, samples)
    }

    pub fn with_start(t0: f64, dt: f64, samples: Vec<DVector<f64>>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(RdmdError::MalformedInput(format!(
                "time step must be positive and finite, got {dt}"
            )));
        }
        if !t0.is_finite() {
            return Err(RdmdError::MalformedInput("start time is not finite".into()));
        }
        if samples.len() < 2 {
            return Err(RdmdError::InsufficientData(format!(
                "a time series needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        let m = samples[0].len();
        if m == 0 {
            return Err(RdmdError::MalformedInput("samples have dimension 0".into()));
        }
        for (k, s) in samples.iter().enumerate() {
            if s.len() != m {
                return Err(RdmdError::MalformedInput(format!(
                    "sample {k} has dimension {} but sample 0 has {m}",
                    s.len()
                )));
            }
            if let Some(i) = s.iter().position(|v| !v.is_finite()) {
                return Err(RdmdError::MalformedInput(format!(
                    "sample {k} channel {i} is not finite"
                )));
            }
        }
        Ok(TimeSeries {
            dt,
            t0,
            samples,
            labels: None,
        })
    }

    /// Builds a series from an `m × (N+1)` matrix whose columns are samples.
    pub fn from_columns(dt: f64, data: &DMatrix<f64>) -> Result<Self> {
        let samples = data.column_iter().map(|c| c.into_owned()).collect();
        Self::new(dt, samples)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.dim() {
            return Err(RdmdError::MalformedInput(format!(
                "{} labels for {} channels",
                labels.len(),
                self.dim()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// State dimension `m`.
    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }

    /// Number of samples, `N + 1`.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[DVector<f64>] {
        &self.samples
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Channel names, falling back to `x1 … xm`.
    pub fn channel_names(&self) -> Vec<String> {
        match &self.labels {
            Some(l) => l.clone(),
            None => (1..=self.dim()).map(|i| format!("x{i}")).collect(),
        }
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    /// The samples as an `m × (N+1)` matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.samples)
    }

    pub(crate) fn samples_mut(&mut self) -> &mut [DVector<f64>] {
        &mut self.samples
    }

    /// Truncates to the first `len` samples.
    pub fn head(&self, len: usize) -> Result<TimeSeries> {
        let mut out = TimeSeries::with_start(self.t0, self.dt, self.samples[..len.min(self.len())].to_vec())?;
        out.labels = self.labels.clone();
        Ok(out)
    }
}

/// The data matrices `Y` and `Y′`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotPair {
    y: DMatrix<f64>,
    yp: DMatrix<f64>,
    dt: f64,
}

impl SnapshotPair {
    /// Pairs taken from separate sources; the overlap invariant is not
    /// required, only matching shapes.
    pub fn from_matrices(y: DMatrix<f64>, yp: DMatrix<f64>, dt: f64) -> Result<Self> {
        if y.shape() != yp.shape() {
            return Err(RdmdError::MalformedInput(format!(
                "Y is {:?} but Y′ is {:?}",
                y.shape(),
                yp.shape()
            )));
        }
        if y.ncols() == 0 || y.nrows() == 0 {
            return Err(RdmdError::InsufficientData("empty snapshot matrices".into()));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(RdmdError::MalformedInput(format!("invalid time step {dt}")));
        }
        if !y.iter().chain(yp.iter()).all(|v| v.is_finite()) {
            return Err(RdmdError::MalformedInput("snapshot entries must be finite".into()));
        }
        Ok(SnapshotPair { y, yp, dt })
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn yp(&self) -> &DMatrix<f64> {
        &self.yp
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.y.nrows()
    }

    /// Number of transitions `N`.
    pub fn len(&self) -> usize {
        self.y.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.y.ncols() == 0
    }

    /// True when column `j` of `Y′` equals column `j + 1` of `Y`.
    pub fn is_overlap_consistent(&self) -> bool {
        (0..self.len().saturating_sub(1)).all(|j| self.yp.column(j) == self.y.column(j + 1))
    }

    /// Stacked transition vectors `[y_k; y_{k+1}]`, one per column.
    pub fn stacked(&self) -> DMatrix<f64> {
        let (m, n) = self.y.shape();
        let mut z = DMatrix::zeros(2 * m, n);
        z.rows_mut(0, m).copy_from(&self.y);
        z.rows_mut(m, m).copy_from(&self.yp);
        z
    }

    /// Multiplies every snapshot by `c`.
    pub fn scaled(&self, c: f64) -> SnapshotPair {
        SnapshotPair {
            y: &self.y * c,
            yp: &self.yp * c,
            dt: self.dt,
        }
    }
}

/// Builds `Y = [y_0 … y_{N−1}]` and `Y′ = [y_1 … y_N]`.
pub fn build_pair(series: &TimeSeries) -> Result<SnapshotPair> {
    let n = series.len();
    if n < 2 {
        return Err(RdmdError::InsufficientData(
            "at least two samples are required to form a snapshot pair".into(),
        ));
    }
    let data = series.to_matrix();
    let y = data.columns(0, n - 1).into_owned();
    let yp = data.columns(1, n - 1).into_owned();
    SnapshotPair::from_matrices(y, yp, series.dt())
}

fn parse_cell(raw: &str, row: usize, column: usize) -> Result<f64> {
    let trimmed = raw.trim();
    let v: f64 = trimmed.parse().map_err(|_| RdmdError::Parse {
        row,
        column,
        message: format!("`{trimmed}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(RdmdError::Parse {
            row,
            column,
            message: format!("`{trimmed}` is not finite"),
        });
    }
    Ok(v)
}

/// Parses CSV text. Rows and columns in error messages are 1-based, with
/// the header as row 1.
pub fn parse_csv<R: Read>(reader: R) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| RdmdError::Parse {
            row: 1,
            column: 1,
            message: e.to_string(),
        })?
        .clone();
    if header.is_empty() || header.get(0).map(|h| h.is_empty()).unwrap_or(true) {
        return Err(RdmdError::Parse {
            row: 1,
            column: 1,
            message: "missing time column header".into(),
        });
    }
    if header.get(0) != Some("t") {
        return Err(RdmdError::Parse {
            row: 1,
            column: 1,
            message: format!("first column must be `t`, found `{}`", &header[0]),
        });
    }
    let width = header.len();
    if width < 2 {
        return Err(RdmdError::Parse {
            row: 1,
            column: 2,
            message: "no measurement channels".into(),
        });
    }
    let labels: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();

    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| RdmdError::Parse {
            row,
            column: 1,
            message: e.to_string(),
        })?;
        if record.len() != width {
            return Err(RdmdError::Parse {
                row,
                column: record.len().min(width) + 1,
                message: format!("expected {width} cells, found {}", record.len()),
            });
        }
        times.push(parse_cell(&record[0], row, 1)?);
        let values = record
            .iter()
            .skip(1)
            .enumerate()
            .map(|(j, cell)| parse_cell(cell, row, j + 2))
            .collect::<Result<Vec<f64>>>()?;
        samples.push(DVector::from_vec(values));
    }
    if samples.len() < 2 {
        return Err(RdmdError::InsufficientData(format!(
            "csv holds {} data rows, at least 2 required",
            samples.len()
        )));
    }
    let t0 = times[0];
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(RdmdError::Parse {
            row: 3,
            column: 1,
            message: "time column must be strictly increasing".into(),
        });
    }
    for k in 1..times.len() {
        let step = times[k] - times[k - 1];
        // allow for rounding of large absolute times
        let tol = SPACING_RTOL * dt + 4.0 * f64::EPSILON * times[k].abs();
        if !(step > 0.0) || (step - dt).abs() > tol {
            return Err(RdmdError::Parse {
                row: k + 2,
                column: 1,
                message: format!("time spacing {step} differs from {dt}"),
            });
        }
    }
    TimeSeries::with_start(t0, dt, samples)?.with_labels(labels)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| RdmdError::io(path, e))?;
    parse_csv(file)
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders CSV text, optionally with extra trailing columns.
pub fn render_csv(series: &TimeSeries, extra: &[(&str, &[f64])]) -> String {
    let mut out = String::new();
    out.push('t');
    for name in series.channel_names() {
        out.push(',');
        out.push_str(&name);
    }
    for (name, _) in extra {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (k, s) in series.samples().iter().enumerate() {
        out.push_str(&fmt_f64(series.time(k)));
        for v in s.iter() {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        for (_, col) in extra {
            out.push(',');
            out.push_str(&fmt_f64(col[k]));
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(series: &TimeSeries, path: impl AsRef<Path>) -> Result<()> {
    write_text(path, &render_csv(series, &[]))
}

pub(crate) fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    let mut f = File::create(path).map_err(|e| RdmdError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| RdmdError::io(path, e))
}
