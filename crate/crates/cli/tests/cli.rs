use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rdmd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdmd"))
        .args(args)
        .current_dir(dir)
        .env_remove("RDMD_SEED")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = rdmd(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    rdmd(dir, args).status.code().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Clean and Case-3 contaminated data for the 2×2 linear system.
fn case3(dir: &Path) {
    ok(dir, &["simulate", "--system", "linear2x2", "--dt", "0.01", "--steps", "500", "--x0", "1,0", "--out", "clean.csv"]);
    ok(
        dir,
        &["inject", "--input", "clean.csv", "--window", "1:1.05:0.3", "--window", "2:2.05:0.3", "--out", "data.csv"],
    );
}

fn leading(spectrum: &Path) -> (f64, f64) {
    let v = json(spectrum);
    let e = &v["eig_continuous"][0];
    (e["re"].as_f64().unwrap(), e["im"].as_f64().unwrap())
}

#[test]
fn simulate_writes_expected_shapes() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["simulate", "--system", "linear2x2", "--dt", "0.01", "--steps", "500", "--x0", "1,0", "--out", "run.csv"]);
    let text = fs::read_to_string(d.path().join("run.csv")).unwrap();
    assert_eq!(text.lines().count(), 502);
    assert_eq!(text.lines().next().unwrap(), "t,x1,x2");

    let ring = ok(d.path(), &["simulate", "--system", "ring", "--s", "15", "--steps", "500"]);
    assert_eq!(ring.lines().next().unwrap().split(',').count(), 31);
    assert_eq!(ring.lines().count(), 502);
}

#[test]
fn usage_errors_exit_with_two() {
    let d = tempfile::tempdir().unwrap();
    case3(d.path());
    assert_eq!(code(d.path(), &["simulate", "--system", "nope"]), 2);
    assert_eq!(code(d.path(), &["simulate", "--system", "linear2x2", "--x0", "1,2,3"]), 2);
    assert_eq!(code(d.path(), &["fit", "--input", "data.csv", "--method", "bogus", "--out", "f"]), 2);
    assert_eq!(code(d.path(), &["fit", "--input", "data.csv", "--method", "nrdmd", "--delta", "-1", "--out", "f"]), 2);
    assert_eq!(code(d.path(), &["fit", "--input", "data.csv", "--method", "standard", "--rank", "5", "--out", "f"]), 2);
    assert_eq!(code(d.path(), &["frobnicate"]), 2);
}

#[test]
fn runtime_errors_exit_with_one() {
    let d = tempfile::tempdir().unwrap();
    case3(d.path());
    assert_eq!(code(d.path(), &["fit", "--input", "missing.csv", "--method", "dmd", "--out", "f"]), 1);
    assert_eq!(
        code(d.path(), &["simulate", "--system", "slow_manifold", "--mu", "50", "--dt", "0.1", "--steps", "500"]),
        1
    );
    assert_eq!(code(d.path(), &["inject", "--input", "clean.csv", "--window", "9:9.1:1"]), 1);
    assert_eq!(
        code(d.path(), &["fit", "--input", "data.csv", "--method", "robust-standard", "--rank", "2", "--out", "f"]),
        1
    );
}

#[test]
fn fit_dmd_recovers_clean_spectrum() {
    let d = tempfile::tempdir().unwrap();
    case3(d.path());
    ok(d.path(), &["fit", "--input", "clean.csv", "--method", "dmd", "--out", "fit"]);
    let (re, im) = leading(&d.path().join("fit/spectrum.json"));
    assert!(re.abs() < 1e-3 && (im.abs() - 2f64.sqrt()).abs() < 1e-3, "{re} {im}");
}

#[test]
fn fit_nrdmd_records_default_tuning() {
    let d = tempfile::tempdir().unwrap();
    case3(d.path());
    ok(d.path(), &["fit", "--input", "data.csv", "--method", "nrdmd", "--out", "fit"]);
    let est = json(&d.path().join("fit/estimate.json"));
    assert_eq!(est["config"]["delta"], 1.5);
    assert_eq!(est["config"]["b"], 1.5);
    assert_eq!(est["config"]["irls_tol"], 0.01);
    for f in ["estimate.json", "spectrum.json", "outliers.json", "manifest.json"] {
        assert_eq!(json(&d.path().join("fit").join(f))["schema_version"], 1, "{f}");
    }
    assert!(json(&d.path().join("fit/manifest.json"))["seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn fit_flags_reach_the_estimator() {
    let d = tempfile::tempdir().unwrap();
    case3(d.path());
    ok(
        d.path(),
        &[
            "fit", "--input", "data.csv", "--method", "krdmd", "--delta", "2", "--b", "2", "--tol", "0.001",
            "--max-iter", "7", "--scale", "s1", "--dof", "3", "--out", "fit",
        ],
    );
    let est = json(&d.path().join("fit/estimate.json"));
    assert_eq!(est["config"]["delta"], 2.0);
    assert_eq!(est["config"]["max_iter"], 7);
    assert!(est["iterations"].as_u64().unwrap() <= 7);
    let rep = json(&d.path().join("fit/outliers.json"));
    assert_eq!(rep["dof"], 3);
    assert_eq!(rep["scale_estimator"], "s1");
    ok(d.path(), &["fit", "--input", "data.csv", "--method", "robust-standard", "--rank", "1", "--gamma", "0", "--out", "rs"]);
    assert_eq!(json(&d.path().join("rs/estimate.json"))["matrix"]["shape"], serde_json::json!([1, 1]));
}

#[test]
fn paired_ingestion_matches_shifted_ingestion() {
    let d = tempfile::tempdir().unwrap();
    case3(d.path());
    let text = fs::read_to_string(d.path().join("data.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let n = lines.len() - 1;
    // Y gets rows 0..n-1, Y′ rows 1..n, both relabelled onto the same grid
    let y: Vec<&str> = std::iter::once(lines[0]).chain(lines[1..n].iter().copied()).collect();
    let times: Vec<&str> = lines[1..n].iter().map(|l| l.split(',').next().unwrap()).collect();
    let yp: Vec<String> = std::iter::once(lines[0].to_string())
        .chain(lines[2..].iter().zip(&times).map(|(l, t)| {
            let rest: Vec<&str> = l.split(',').skip(1).collect();
            format!("{t},{}", rest.join(","))
        }))
        .collect();
    fs::write(d.path().join("y.csv"), y.join("\n") + "\n").unwrap();
    fs::write(d.path().join("yp.csv"), yp.join("\n") + "\n").unwrap();
    ok(d.path(), &["fit", "--input", "data.csv", "--method", "nrdmd", "--out", "a"]);
    ok(d.path(), &["fit", "--input", "y.csv", "--paired", "yp.csv", "--method", "nrdmd", "--out", "b"]);
    let a = json(&d.path().join("a/estimate.json"));
    let b = json(&d.path().join("b/estimate.json"));
    assert_eq!(a["matrix"], b["matrix"]);
}

#[test]
fn reconstruct_reports_cumulative_error() {
    let d = tempfile::tempdir().unwrap();
    case3(d.path());
    ok(d.path(), &["fit", "--input", "clean.csv", "--method", "dmd", "--out", "fit"]);
    ok(d.path(), &["reconstruct", "--estimate", "fit/estimate.json", "--truth", "clean.csv", "--out", "r.csv"]);
    let text = fs::read_to_string(d.path().join("r.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,x1,x2,cum_err");
    assert_eq!(text.lines().count(), 502);
    let last: f64 = text.lines().last().unwrap().split(',').last().unwrap().parse().unwrap();
    assert!(last < 1e-6, "{last}");
    let free = ok(d.path(), &["reconstruct", "--estimate", "fit/estimate.json", "--x0", "1,0", "--steps", "10"]);
    assert_eq!(free.lines().count(), 12);
    assert_eq!(code(d.path(), &["reconstruct", "--estimate", "fit/estimate.json"]), 2);
}

#[test]
fn compare_self_reconstruction_has_zero_error() {
    let d = tempfile::tempdir().unwrap();
    case3(d.path());
    ok(d.path(), &["fit", "--input", "data.csv", "--method", "nrdmd", "--out", "fit"]);
    ok(d.path(), &["reconstruct", "--estimate", "fit/estimate.json", "--x0", "1,0", "--steps", "500", "--out", "self.csv"]);
    let table = ok(d.path(), &["compare", "--truth", "self.csv", "--fit", "fit/estimate.json"]);
    let header: Vec<&str> = table.lines().next().unwrap().split(',').collect();
    let row: Vec<&str> = table.lines().nth(1).unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "final_cum_error").unwrap();
    assert_eq!(row[col].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn compare_orders_dmd_behind_nrdmd_and_merges_external_rows() {
    let d = tempfile::tempdir().unwrap();
    case3(d.path());
    ok(d.path(), &["fit", "--input", "data.csv", "--method", "dmd", "--out", "dmd"]);
    ok(d.path(), &["fit", "--input", "data.csv", "--method", "nrdmd", "--out", "nrdmd"]);
    fs::write(d.path().join("ext.csv"), "method,lambda1_re,lambda1_im,rms_error\ntdmd,-0.001,1.414,0.01\n").unwrap();
    ok(
        d.path(),
        &[
            "compare", "--truth", "clean.csv", "--fit", "dmd/estimate.json", "--fit", "nrdmd/estimate.json",
            "--external", "ext.csv", "--out", "cmp.csv", "--plot", "plot.csv",
        ],
    );
    let table = fs::read_to_string(d.path().join("cmp.csv")).unwrap();
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!((rows[0][0], rows[1][0], rows[2][0]), ("dmd", "nrdmd", "tdmd"));
    let re = |r: &Vec<&str>| r[1].parse::<f64>().unwrap().abs();
    assert!(re(&rows[0]) > re(&rows[1]));
    assert_eq!(rows[2][2], "1.414");
    let plot = fs::read_to_string(d.path().join("plot.csv")).unwrap();
    assert_eq!(plot.lines().next().unwrap(), "t,channel,truth,dmd,nrdmd");
    assert_eq!(plot.lines().count(), 1 + 501 * 2);
}

#[test]
fn compare_rejects_mismatched_horizons() {
    let d = tempfile::tempdir().unwrap();
    case3(d.path());
    ok(d.path(), &["simulate", "--system", "linear2x2", "--steps", "300", "--out", "short.csv"]);
    assert_eq!(code(d.path(), &["compare", "--truth", "clean.csv", "--recon", "short=short.csv"]), 1);
    ok(d.path(), &["simulate", "--system", "linear2x2", "--dt", "0.02", "--steps", "500", "--out", "coarse.csv"]);
    ok(d.path(), &["fit", "--input", "coarse.csv", "--method", "dmd", "--out", "coarse"]);
    assert_eq!(code(d.path(), &["compare", "--truth", "clean.csv", "--fit", "coarse/estimate.json"]), 1);
}

const SPEC: &str = r#"
name = "case3"
seed = 3
[system]
name = "linear2x2"
steps = 300
[contamination]
gaussian_sigma = 0.001
windows = [{ start = 1.0, end = 1.05, magnitude = 0.3 }]
[fit]
methods = ["dmd", "nrdmd"]
"#;

#[test]
fn run_is_reproducible_and_seed_overridable() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("exp.toml"), SPEC).unwrap();
    ok(d.path(), &["run", "--spec", "exp.toml", "--out", "a"]);
    ok(d.path(), &["run", "--spec", "exp.toml", "--out", "b"]);
    let manifest = json(&d.path().join("a/manifest.json"));
    assert_eq!(manifest["schema_version"], 1);
    let mut files: Vec<String> =
        manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_owned()).collect();
    files.push("manifest.json".into());
    for f in &files {
        let x = fs::read(d.path().join("a").join(f)).unwrap();
        let y = fs::read(d.path().join("b").join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
        if f.ends_with(".json") {
            assert_eq!(json(&d.path().join("a").join(f))["schema_version"], 1, "{f}");
        }
    }
    let timings = json(&d.path().join("a/timings.json"));
    let secs: Vec<f64> = timings["methods"].as_array().unwrap().iter().map(|m| m["seconds"].as_f64().unwrap()).collect();
    assert!(secs.iter().all(|&s| s >= 0.0));
    // robust fits include outlier scoring, so they cannot beat plain DMD
    assert!(secs[1] > secs[0], "{secs:?}");

    let out = Command::new(env!("CARGO_BIN_EXE_rdmd"))
        .args(["run", "--spec", "exp.toml", "--out", "c"])
        .current_dir(d.path())
        .env("RDMD_SEED", "4")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(json(&d.path().join("c/spec_resolved.json"))["seed"], 4);
    assert_ne!(
        fs::read(d.path().join("a/data.csv")).unwrap(),
        fs::read(d.path().join("c/data.csv")).unwrap()
    );
}

#[test]
fn run_rejects_bad_specs() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("bad.toml"), "[fit]\nmethods = [\"bogus\"]\n").unwrap();
    assert_eq!(code(d.path(), &["run", "--spec", "bad.toml", "--out", "x"]), 2);
    assert_eq!(code(d.path(), &["run", "--spec", "missing.toml", "--out", "x"]), 1);
}
