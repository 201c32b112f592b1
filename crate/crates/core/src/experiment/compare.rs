//! Method comparison tables and plot-ready long-format output.
//!
//! Comparison CSV columns: `method`, then `lambda{i}_re, lambda{i}_im` for
//! the leading continuous eigenvalues, `final_cum_error`, `rms_error`,
//! optionally `seconds`, and `note`. Missing values are empty cells.

use std::io::Read;

use num_complex::Complex64;

use crate::error::{RdmdError, Result};
use crate::modal::Spectrum;
use crate::snapshots::{fmt_f64, TimeSeries};

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonRow {
    pub method: String,
    /// Leading continuous eigenvalues in spectrum order.
    pub eigenvalues: Vec<Option<Complex64>>,
    pub final_cum_error: Option<f64>,
    pub rms_error: Option<f64>,
    pub seconds: Option<f64>,
    pub note: String,
}

impl ComparisonRow {
    pub fn from_spectrum(method: &str, spec: &Spectrum, leading: usize) -> Self {
        ComparisonRow {
            method: method.to_owned(),
            eigenvalues: spec.eig_continuous.iter().take(leading).copied().collect(),
            ..Default::default()
        }
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Renders the comparison table.
pub fn comparison_csv(rows: &[ComparisonRow], leading: usize, with_seconds: bool) -> String {
    let mut header = vec!["method".to_string()];
    for i in 1..=leading {
        header.push(format!("lambda{i}_re"));
        header.push(format!("lambda{i}_im"));
    }
    header.push("final_cum_error".into());
    header.push("rms_error".into());
    if with_seconds {
        header.push("seconds".into());
    }
    header.push("note".into());
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let mut cells = vec![quote(&r.method)];
        for i in 0..leading {
            let l = r.eigenvalues.get(i).copied().flatten();
            cells.push(cell(l.map(|c| c.re)));
            cells.push(cell(l.map(|c| c.im)));
        }
        cells.push(cell(r.final_cum_error));
        cells.push(cell(r.rms_error));
        if with_seconds {
            cells.push(cell(r.seconds));
        }
        cells.push(quote(&r.note));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Reads externally produced rows (for example from another toolbox)
/// in the comparison layout. Unknown columns are ignored.
pub fn parse_external<R: Read>(reader: R) -> Result<Vec<ComparisonRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| RdmdError::Parse { row: 1, column: 1, message: e.to_string() })?
        .clone();
    let find = |name: &str| header.iter().position(|h| h == name);
    let method_col = find("method").ok_or_else(|| RdmdError::Parse {
        row: 1,
        column: 1,
        message: "external results need a `method` column".into(),
    })?;
    let mut eig_cols = Vec::new();
    for i in 1.. {
        match (find(&format!("lambda{i}_re")), find(&format!("lambda{i}_im"))) {
            (Some(re), Some(im)) => eig_cols.push((re, im)),
            _ => break,
        }
    }
    for h in header.iter() {
        let known = h == "method"
            || h == "final_cum_error"
            || h == "rms_error"
            || h == "seconds"
            || h == "note"
            || (h.starts_with("lambda") && (h.ends_with("_re") || h.ends_with("_im")));
        if !known {
            log::warn!("ignoring external column `{h}`");
        }
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| RdmdError::Parse { row, column: 1, message: e.to_string() })?;
        let num = |col: Option<usize>| -> Result<Option<f64>> {
            let Some(c) = col else { return Ok(None) };
            let s = rec.get(c).unwrap_or("");
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>().map(Some).map_err(|_| RdmdError::Parse {
                row,
                column: c + 1,
                message: format!("`{s}` is not a number"),
            })
        };
        let mut eigenvalues = Vec::new();
        for &(re, im) in &eig_cols {
            eigenvalues.push(match (num(Some(re))?, num(Some(im))?) {
                (Some(a), Some(b)) => Some(Complex64::new(a, b)),
                _ => None,
            });
        }
        rows.push(ComparisonRow {
            method: rec.get(method_col).unwrap_or("").to_owned(),
            eigenvalues,
            final_cum_error: num(find("final_cum_error"))?,
            rms_error: num(find("rms_error"))?,
            seconds: num(find("seconds"))?,
            note: find("note").and_then(|c| rec.get(c)).unwrap_or("").to_owned(),
        });
    }
    Ok(rows)
}

/// Checks that `other` is sampled on the same grid as `truth`.
pub fn check_horizon(truth: &TimeSeries, other: &TimeSeries, what: &str) -> Result<()> {
    let same_dt = (truth.dt() - other.dt()).abs() <= 1e-9 * truth.dt();
    let same_t0 = (truth.t0() - other.t0()).abs() <= 1e-9 * truth.dt();
    if other.len() != truth.len() || !same_dt || !same_t0 || other.dim() != truth.dim() {
        return Err(RdmdError::Domain(format!(
            "horizon of {what} ({} samples of dimension {}, dt {}, t0 {}) does not match the truth \
             ({} samples of dimension {}, dt {}, t0 {})",
            other.len(),
            other.dim(),
            other.dt(),
            other.t0(),
            truth.len(),
            truth.dim(),
            truth.dt(),
            truth.t0()
        )));
    }
    Ok(())
}

/// Long-format CSV: one row per time and channel with the truth and one
/// column per reconstruction.
pub fn plot_csv(truth: &TimeSeries, recons: &[(String, TimeSeries)]) -> Result<String> {
    for (name, r) in recons {
        check_horizon(truth, r, name)?;
    }
    let mut out = String::from("t,channel,truth");
    for (name, _) in recons {
        out.push(',');
        out.push_str(&quote(name));
    }
    out.push('\n');
    let names = truth.channel_names();
    for k in 0..truth.len() {
        let t = fmt_f64(truth.time(k));
        for (i, ch) in names.iter().enumerate() {
            out.push_str(&t);
            out.push(',');
            out.push_str(&quote(ch));
            out.push(',');
            out.push_str(&fmt_f64(truth.samples()[k][i]));
            for (_, r) in recons {
                out.push(',');
                out.push_str(&fmt_f64(r.samples()[k][i]));
            }
            out.push('\n');
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn series(n: usize, dt: f64) -> TimeSeries {
        TimeSeries::new(dt, (0..n).map(|k| DVector::from_vec(vec![k as f64, 1.0])).collect()).unwrap()
    }

    #[test]
    fn table_round_trips_through_external_parser() {
        let rows = vec![
            ComparisonRow {
                method: "dmd".into(),
                eigenvalues: vec![Some(Complex64::new(-0.2, 1.4)), None],
                final_cum_error: Some(3.5),
                rms_error: Some(0.25),
                seconds: Some(0.001),
                note: String::new(),
            },
            ComparisonRow {
                method: "tdmd".into(),
                eigenvalues: vec![Some(Complex64::new(0.0, 1.0)), Some(Complex64::new(0.0, -1.0))],
                note: "external, a \"note\"".into(),
                ..Default::default()
            },
        ];
        let text = comparison_csv(&rows, 2, true);
        assert!(text.starts_with("method,lambda1_re,lambda1_im,lambda2_re,lambda2_im,final_cum_error"));
        let back = parse_external(text.as_bytes()).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn external_rows_need_a_method_column() {
        assert!(parse_external("name,rms_error\nx,1\n".as_bytes()).is_err());
        assert!(parse_external("method,rms_error\nx,abc\n".as_bytes()).is_err());
        let rows = parse_external("method,extra\nx,1\n".as_bytes()).unwrap();
        assert_eq!(rows[0].method, "x");
    }

    #[test]
    fn plot_layout_and_horizon_check() {
        let truth = series(3, 0.5);
        let text = plot_csv(&truth, &[("a".into(), series(3, 0.5))]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,channel,truth,a");
        assert_eq!(lines.len(), 1 + 3 * 2);
        assert!(lines[3].contains(",x1,"));
        assert!(matches!(plot_csv(&truth, &[("a".into(), series(4, 0.5))]), Err(RdmdError::Domain(_))));
        assert!(matches!(plot_csv(&truth, &[("a".into(), series(3, 0.25))]), Err(RdmdError::Domain(_))));
    }
}
