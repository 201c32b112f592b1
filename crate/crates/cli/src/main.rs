mod args;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Parser;
use nalgebra::DVector;
use rdmd::error::RdmdError;
use rdmd::estimators::{fit_with_report, FitOptions, OperatorEstimate};
use rdmd::experiment::{
    check_horizon, comparison_csv, parse_external, plot_csv, read_versioned, run_experiment, to_json,
    write_versioned, ComparisonRow, ExperimentSpec, SCHEMA_VERSION,
};
use rdmd::modal::{reconstruct, rms_error, spectrum, ReconstructionMode, SpectrumJson};
use rdmd::robust_stats::OutlierReport;
use rdmd::snapshots::{build_pair, read_csv, render_csv, SnapshotPair, TimeSeries};
use rdmd::systems::{contaminate, simulate, BenchmarkSystem, ContaminationPlan, SystemParams};
use serde_json::json;

use args::{Cli, Command, CompareArgs, FitArgs, InjectArgs, ReconstructArgs, RunArgs, SimulateArgs};

/// A problem with how the tool was invoked (exit code 2).
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<RdmdError>() {
        Some(RdmdError::Config(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Inject(a) => cmd_inject(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Run(a) => cmd_run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    if !(a.dt > 0.0 && a.dt.is_finite()) {
        return Err(usage(format!("--dt must be positive, got {}", a.dt)));
    }
    if a.steps == 0 {
        return Err(usage("--steps must be at least 1"));
    }
    let params = SystemParams {
        s: a.s,
        m: a.m,
        mu: a.mu,
        lambda: a.lambda,
        damping: a.damping,
        literal: a.literal,
        seed: a.seed,
    };
    let system = BenchmarkSystem::from_name(&a.system, &params)?;
    let x0 = match a.x0 {
        Some(args::FloatList(v)) if v.len() != system.dim() => {
            return Err(usage(format!(
                "--x0 has {} entries but {} has dimension {}",
                v.len(),
                system.name(),
                system.dim()
            )))
        }
        Some(args::FloatList(v)) => DVector::from_vec(v),
        None => system.default_x0(),
    };
    let series = simulate(&system, &x0, a.dt, a.steps)?;
    let resolved = json!({
        "schema_version": SCHEMA_VERSION,
        "system": system,
        "dt": a.dt,
        "steps": a.steps,
        "x0": x0.as_slice(),
    });
    eprintln!("{}", serde_json::to_string_pretty(&resolved)?);
    emit(a.out.as_deref(), &render_csv(&series, &[]))
}

fn cmd_inject(a: InjectArgs) -> Result<()> {
    let series = read_csv(&a.input)?;
    let plan = ContaminationPlan {
        gaussian_sigma: a.gaussian_sigma,
        noise: a.noise.unwrap_or_default(),
        windows: a.windows,
        spike: a.spike,
        seed: a.seed,
    };
    let out = contaminate(&series, &plan)?;
    eprintln!("{}", serde_json::to_string_pretty(&json!({ "schema_version": SCHEMA_VERSION, "plan": plan }))?);
    emit(a.out.as_deref(), &render_csv(&out, &[]))
}

fn load_pair(input: &Path, paired: Option<&Path>) -> Result<SnapshotPair> {
    let y = read_csv(input)?;
    let Some(p) = paired else {
        return Ok(build_pair(&y)?);
    };
    let yp = read_csv(p)?;
    if yp.len() != y.len() || yp.dim() != y.dim() {
        return Err(RdmdError::MalformedInput(format!(
            "paired file has {} samples of dimension {}, input has {} of dimension {}",
            yp.len(),
            yp.dim(),
            y.len(),
            y.dim()
        ))
        .into());
    }
    Ok(SnapshotPair::from_matrices(y.to_matrix(), yp.to_matrix(), y.dt())?)
}

fn fit_options(a: &FitArgs) -> FitOptions {
    let mut o = FitOptions::default();
    let h = &mut o.huber;
    h.delta = a.delta.unwrap_or(h.delta);
    h.b = a.b.unwrap_or(h.b);
    h.irls_tol = a.tol.unwrap_or(h.irls_tol);
    h.max_iter = a.max_iter.unwrap_or(h.max_iter);
    h.gamma = a.gamma.unwrap_or(h.gamma);
    h.bm = a.bm.unwrap_or(h.bm);
    h.freeze_scale = a.freeze_scale;
    o.scale = a.scale.unwrap_or(o.scale);
    o.dof = a.dof;
    o.quantile = a.quantile;
    o.rank = a.rank;
    o.unit_weights = a.unit_weights;
    o
}

fn fmt_eigs(spec: &SpectrumJson, count: usize) -> String {
    spec.eig_continuous
        .iter()
        .take(count)
        .map(|l| match l {
            Some(c) => format!("{:.6}{:+.6}j", c.re, c.im),
            None => "-inf".into(),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let pair = load_pair(&a.input, a.paired.as_deref())?;
    let opts = fit_options(&a);
    opts.huber.validate()?;
    let start = Instant::now();
    let report = if a.method.is_robust() {
        opts.report(&pair)?
    } else {
        OutlierReport::unit(pair.len())
    };
    let est = fit_with_report(&pair, a.method, &opts, &report)?;
    let seconds = start.elapsed().as_secs_f64();
    let spec = SpectrumJson::from(&spectrum(&est)?);

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut outputs = vec!["estimate.json", "spectrum.json"];
    write_versioned(a.out.join("estimate.json"), &est)?;
    write_versioned(a.out.join("spectrum.json"), &spec)?;
    if a.method.is_robust() {
        write_versioned(a.out.join("outliers.json"), &report)?;
        outputs.push("outliers.json");
    }
    let mut inputs = vec![a.input.display().to_string()];
    if let Some(p) = &a.paired {
        inputs.push(p.display().to_string());
    }
    let manifest = json!({
        "schema_version": SCHEMA_VERSION,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": "fit",
        "method": a.method,
        "inputs": inputs,
        "outputs": outputs,
        "seconds": seconds,
    });
    fs::write(a.out.join("manifest.json"), to_json(&manifest)?)?;
    println!(
        "{}: {} iterations, converged {}, flagged {}, eigenvalues {}",
        a.method,
        est.iterations,
        est.converged,
        report.flagged().count(),
        fmt_eigs(&spec, 4)
    );
    Ok(())
}

fn load_estimate(path: &Path) -> Result<OperatorEstimate> {
    read_versioned(path).with_context(|| format!("reading estimate {}", path.display()))
}

fn cmd_reconstruct(a: ReconstructArgs) -> Result<()> {
    let est = load_estimate(&a.estimate)?;
    let truth = a.truth.as_deref().map(read_csv).transpose()?;
    let x0 = match (&a.x0, &truth) {
        (Some(v), _) => DVector::from_vec(v.0.clone()),
        (None, Some(t)) => t.samples()[0].clone(),
        (None, None) => return Err(usage("give --x0 or --truth")),
    };
    let steps = match (a.steps, &truth) {
        (Some(s), _) => s,
        (None, Some(t)) => t.len() - 1,
        (None, None) => return Err(usage("give --steps or --truth")),
    };
    if a.mode == ReconstructionMode::OneStep && truth.is_none() {
        return Err(usage("one_step reconstruction needs --truth"));
    }
    let r = reconstruct(&est, &x0, steps, a.mode, truth.as_ref())?;
    if let Some(e) = r.final_error() {
        eprintln!("final cumulative error {e}");
    }
    emit(a.out.as_deref(), &r.to_csv())
}

fn split_named(s: &str) -> (Option<&str>, &str) {
    match s.split_once('=') {
        Some((n, p)) if !n.is_empty() => (Some(n), p),
        _ => (None, s),
    }
}

/// Seconds recorded by `fit` next to an estimate, if any.
fn recorded_seconds(estimate: &Path) -> Option<f64> {
    let manifest = estimate.parent()?.join("manifest.json");
    let text = fs::read_to_string(manifest).ok()?;
    let v: serde_json::Value = serde_json::from_str(&text).ok()?;
    v.get("seconds")?.as_f64()
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    if a.fits.is_empty() && a.recons.is_empty() && a.external.is_empty() {
        return Err(usage("nothing to compare: give --fit, --recon or --external"));
    }
    if a.leading == 0 {
        return Err(usage("--leading must be positive"));
    }
    let truth = read_csv(&a.truth)?;
    let x0 = truth.samples()[0].clone();
    let steps = truth.len() - 1;
    let mut rows = Vec::new();
    let mut curves: Vec<(String, TimeSeries)> = Vec::new();
    for f in &a.fits {
        let (name, path) = split_named(f);
        let path = PathBuf::from(path);
        let est = load_estimate(&path)?;
        let name = name.map(str::to_owned).unwrap_or_else(|| est.method.name().to_owned());
        if (est.dt - truth.dt()).abs() > 1e-9 * truth.dt() {
            return Err(RdmdError::Domain(format!(
                "horizon mismatch: {name} was fitted at dt {} but the truth has dt {}",
                est.dt,
                truth.dt()
            ))
            .into());
        }
        let spec = spectrum(&est)?;
        let mut row = ComparisonRow::from_spectrum(&name, &spec, a.leading);
        row.seconds = recorded_seconds(&path);
        match reconstruct(&est, &x0, steps, a.mode, Some(&truth)) {
            Ok(r) => {
                row.final_cum_error = r.final_error();
                row.rms_error = Some(rms_error(&r.trajectory, &truth));
                curves.push((name, r.trajectory));
            }
            Err(RdmdError::Divergence { step }) => row.note = format!("reconstruction diverged at step {step}"),
            Err(e) => return Err(e.into()),
        }
        rows.push(row);
    }
    for r in &a.recons {
        let (Some(name), path) = split_named(r) else {
            return Err(usage(format!("--recon expects NAME=PATH, got `{r}`")));
        };
        let series = read_csv(path)?;
        check_horizon(&truth, &series, name)?;
        let cum = rdmd::modal::cumulative_error(&series, &truth);
        rows.push(ComparisonRow {
            method: name.to_owned(),
            final_cum_error: cum.last().copied(),
            rms_error: Some(rms_error(&series, &truth)),
            ..Default::default()
        });
        curves.push((name.to_owned(), series));
    }
    for path in &a.external {
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        rows.extend(parse_external(file)?);
    }
    let with_seconds = rows.iter().any(|r| r.seconds.is_some());
    emit(a.out.as_deref(), &comparison_csv(&rows, a.leading, with_seconds))?;
    if let Some(p) = &a.plot {
        fs::write(p, plot_csv(&truth, &curves)?).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let mut spec = ExperimentSpec::load(&a.spec)?;
    if let Ok(s) = std::env::var("RDMD_SEED") {
        spec.seed = s
            .trim()
            .parse()
            .map_err(|_| usage(format!("RDMD_SEED must be an unsigned integer, got `{s}`")))?;
    }
    let resolved = spec.resolve()?;
    let manifest = run_experiment(&resolved, &a.out)?;
    println!("{} (spec {}), outputs in {}", manifest.name, &manifest.spec_hash[..12], a.out.display());
    for m in &manifest.methods {
        let err = m.final_cum_error.map(|e| format!("{e:.4e}")).unwrap_or_else(|| "-".into());
        println!("  {:<16} cumulative error {err:<12} {}", m.method.name(), m.status);
    }
    Ok(())
}
