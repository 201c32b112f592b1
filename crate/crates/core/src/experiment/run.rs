use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::compare::{comparison_csv, plot_csv, ComparisonRow};
use super::spec::ResolvedSpec;
use super::{to_json, Versioned, SCHEMA_VERSION};
use crate::error::{RdmdError, Result};
use crate::estimators::{fit_with_report, Method, OperatorEstimate};
use crate::modal::{reconstruct, rms_error, spectrum, ComplexJson, SpectrumJson};
use crate::robust_stats::OutlierReport;
use crate::snapshots::{build_pair, render_csv, write_text};
use crate::systems::{contaminate, simulate};

/// Per-method summary in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestMethod {
    pub method: Method,
    pub estimate: String,
    pub spectrum: String,
    pub reconstruction: Option<String>,
    pub iterations: usize,
    pub converged: bool,
    pub eig_continuous: Vec<Option<ComplexJson>>,
    pub final_cum_error: Option<f64>,
    pub rms_error: Option<f64>,
    pub status: String,
}

/// What a run produced. Paths are relative to the output directory, and
/// wall-clock timings live in the separate timings file so that the
/// manifest itself is reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub name: String,
    pub spec_hash: String,
    pub seed: u64,
    pub spec: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub timings: String,
    pub methods: Vec<ManifestMethod>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodTiming {
    pub method: Method,
    /// Fit time, plus outlier scoring for robust methods.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub schema_version: u32,
    pub spec_hash: String,
    pub outlier_scoring_seconds: f64,
    pub methods: Vec<MethodTiming>,
    pub total_seconds: f64,
}

struct Outcome {
    estimate: OperatorEstimate,
    spectrum: SpectrumJson,
    row: ComparisonRow,
    recon: Option<crate::modal::ReconstructionResult>,
    status: String,
    seconds: f64,
}

/// Runs `spec` and writes all outputs into `out_dir` (created if needed).
pub fn run_experiment(spec: &ResolvedSpec, out_dir: impl AsRef<Path>) -> Result<RunManifest> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| RdmdError::io(out_dir, e))?;
    let start = Instant::now();
    let hash = spec.hash();

    let clean = simulate(&spec.system, &spec.x0(), spec.dt, spec.steps)?;
    let data = contaminate(&clean, &spec.contamination)?;
    let pair = build_pair(&data)?;
    let opts = spec.fit.options();

    let score_start = Instant::now();
    let report: Option<OutlierReport> = if spec.fit.methods.iter().any(|m| m.is_robust()) {
        Some(opts.report(&pair)?)
    } else {
        None
    };
    let scoring = score_start.elapsed().as_secs_f64();

    let truth = clean.head(spec.reconstruct_steps + 1)?;
    let x0 = clean.samples()[0].clone();
    let mut outcomes = Vec::with_capacity(spec.fit.methods.len());
    for &method in &spec.fit.methods {
        let t = Instant::now();
        let unit;
        let rep = match &report {
            Some(r) => r,
            None => {
                unit = OutlierReport::unit(pair.len());
                &unit
            }
        };
        let estimate = fit_with_report(&pair, method, &opts, rep)?;
        let seconds = t.elapsed().as_secs_f64() + if method.is_robust() { scoring } else { 0.0 };
        let spec_full = spectrum(&estimate)?;
        let mut row = ComparisonRow::from_spectrum(method.name(), &spec_full, spec.leading);
        let (recon, status) =
            match reconstruct(&estimate, &x0, spec.reconstruct_steps, spec.reconstruct_mode, Some(&truth)) {
                Ok(r) => {
                    row.final_cum_error = r.final_error();
                    row.rms_error = Some(rms_error(&r.trajectory, &truth));
                    (Some(r), "ok".to_string())
                }
                Err(RdmdError::Divergence { step }) => (None, format!("reconstruction diverged at step {step}")),
                Err(e) => return Err(e),
            };
        row.note = if status == "ok" { String::new() } else { status.clone() };
        outcomes.push(Outcome {
            estimate,
            spectrum: (&spec_full).into(),
            row,
            recon,
            status,
            seconds,
        });
    }

    let mut outputs = Vec::new();
    let mut put = |name: &str, text: &str| -> Result<()> {
        write_text(out_dir.join(name), text)?;
        outputs.push(name.to_owned());
        Ok(())
    };
    put("spec_resolved.json", &to_json(spec)?)?;
    put("clean.csv", &render_csv(&clean, &[]))?;
    put("data.csv", &render_csv(&data, &[]))?;
    if let Some(r) = &report {
        put("outliers.json", &to_json(&Versioned::new(r))?)?;
    }
    let mut methods = Vec::new();
    let mut recons = Vec::new();
    for o in &outcomes {
        let name = o.estimate.method.name();
        let estimate_file = format!("estimate_{name}.json");
        let spectrum_file = format!("spectrum_{name}.json");
        put(&estimate_file, &to_json(&Versioned::new(&o.estimate))?)?;
        put(&spectrum_file, &to_json(&Versioned::new(&o.spectrum))?)?;
        let reconstruction = match &o.recon {
            Some(r) => {
                let file = format!("reconstruction_{name}.csv");
                put(&file, &r.to_csv())?;
                recons.push((name.to_owned(), r.trajectory.clone()));
                Some(file)
            }
            None => None,
        };
        methods.push(ManifestMethod {
            method: o.estimate.method,
            estimate: estimate_file,
            spectrum: spectrum_file,
            reconstruction,
            iterations: o.estimate.iterations,
            converged: o.estimate.converged,
            eig_continuous: o.spectrum.eig_continuous.clone(),
            final_cum_error: o.row.final_cum_error,
            rms_error: o.row.rms_error,
            status: o.status.clone(),
        });
    }
    let rows: Vec<ComparisonRow> = outcomes.iter().map(|o| o.row.clone()).collect();
    put("comparison.csv", &comparison_csv(&rows, spec.leading, false))?;
    put("plot.csv", &plot_csv(&truth, &recons)?)?;

    let timings = Timings {
        schema_version: SCHEMA_VERSION,
        spec_hash: hash.clone(),
        outlier_scoring_seconds: scoring,
        methods: outcomes
            .iter()
            .map(|o| MethodTiming { method: o.estimate.method, seconds: o.seconds })
            .collect(),
        total_seconds: start.elapsed().as_secs_f64(),
    };
    write_text(out_dir.join("timings.json"), &to_json(&timings)?)?;

    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        name: spec.name.clone(),
        spec_hash: hash,
        seed: spec.seed,
        spec: "spec_resolved.json".into(),
        inputs: Vec::new(),
        outputs,
        timings: "timings.json".into(),
        methods,
    };
    write_text(out_dir.join("manifest.json"), &to_json(&manifest)?)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::ExperimentSpec;

    fn case3() -> ResolvedSpec {
        ExperimentSpec::from_toml(
            r#"
seed = 5
[system]
steps = 300
[contamination]
windows = [{ start = 1.0, end = 1.05, magnitude = 0.3 }, { start = 2.0, end = 2.05, magnitude = 0.3 }]
[fit]
methods = ["dmd", "nrdmd"]
"#,
        )
        .unwrap()
        .resolve()
        .unwrap()
    }

    #[test]
    fn run_writes_everything_it_lists() {
        let dir = tempfile::tempdir().unwrap();
        let m = run_experiment(&case3(), dir.path()).unwrap();
        for f in m.outputs.iter().chain([&m.timings, &m.spec]) {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        assert!(dir.path().join("manifest.json").exists());
        assert_eq!(m.methods.len(), 2);
        let dmd = &m.methods[0];
        let rob = &m.methods[1];
        let re = |mm: &ManifestMethod| mm.eig_continuous[0].unwrap().re.abs();
        assert!(re(dmd) > re(rob));
        assert!(m.methods.iter().all(|x| x.status == "ok"));
    }

    #[test]
    fn reruns_are_byte_identical() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let spec = case3();
        let m = run_experiment(&spec, a.path()).unwrap();
        run_experiment(&spec, b.path()).unwrap();
        for f in m.outputs.iter().chain([&"manifest.json".to_string()]) {
            let x = std::fs::read(a.path().join(f)).unwrap();
            let y = std::fs::read(b.path().join(f)).unwrap();
            assert!(x == y, "{f} differs");
        }
    }
}
