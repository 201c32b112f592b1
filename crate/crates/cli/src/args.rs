use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rdmd::estimators::Method;
use rdmd::modal::ReconstructionMode;
use rdmd::robust_stats::ScaleEstimatorKind;
use rdmd::systems::{NoiseKind, OutlierWindow, SpikePlan, SYSTEM_NAMES};

#[derive(Debug, Parser)]
#[command(name = "rdmd", version, about = "Robust dynamic mode decomposition experiments")]
pub struct Cli {
    /// Log more (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a benchmark system and write its snapshots as CSV.
    Simulate(SimulateArgs),
    /// Add noise, outlier windows or spikes to a snapshot CSV.
    Inject(InjectArgs),
    /// Estimate a linear operator from a snapshot CSV.
    Fit(FitArgs),
    /// Propagate a fitted operator.
    Reconstruct(ReconstructArgs),
    /// Tabulate eigenvalues and reconstruction errors of several fits.
    Compare(CompareArgs),
    /// Run a full experiment from a TOML spec.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SYSTEM_NAMES))]
    pub system: String,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    /// Initial state, comma separated.
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub x0: Option<FloatList>,
    /// Number of ring oscillators.
    #[arg(long)]
    pub s: Option<usize>,
    /// State dimension of random systems.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub damping: Option<f64>,
    /// Van der Pol without the restoring term.
    #[arg(long)]
    pub literal: bool,
    #[arg(long, env = "RDMD_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; standard output if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InjectArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Base Gaussian noise level.
    #[arg(long, default_value_t = 0.0)]
    pub gaussian_sigma: f64,
    /// `gaussian:SIGMA`, `laplace:VARIANCE`, `student-t:DOF` or `cauchy:GAMMA`.
    #[arg(long, value_parser = parse_noise)]
    pub noise: Option<NoiseKind>,
    /// `START:END:MAGNITUDE`, repeatable.
    #[arg(long = "window", value_parser = parse_window, allow_hyphen_values = true)]
    pub windows: Vec<OutlierWindow>,
    /// `MU:P:ETA`.
    #[arg(long, value_parser = parse_spike)]
    pub spike: Option<SpikePlan>,
    #[arg(long, env = "RDMD_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Snapshot CSV; with `--paired` it holds `Y` only.
    #[arg(long)]
    pub input: PathBuf,
    /// CSV holding `Y′` column for column, instead of shifting `--input`.
    #[arg(long)]
    pub paired: Option<PathBuf>,
    #[arg(long, value_parser = parse_method)]
    pub method: Method,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, value_parser = parse_scale)]
    pub scale: Option<ScaleEstimatorKind>,
    #[arg(long)]
    pub dof: Option<usize>,
    #[arg(long)]
    pub quantile: Option<f64>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub bm: Option<f64>,
    /// Keep the initial robust scale through the iterations.
    #[arg(long)]
    pub freeze_scale: bool,
    /// Skip outlier scoring (all weights one).
    #[arg(long)]
    pub unit_weights: bool,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Estimate JSON written by `fit`.
    #[arg(long)]
    pub estimate: PathBuf,
    /// Reference series; supplies the initial state and the error columns.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub x0: Option<FloatList>,
    /// Defaults to the length of `--truth`.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_parser = parse_mode, default_value = "free_run")]
    pub mode: ReconstructionMode,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub truth: PathBuf,
    /// Estimate JSON, optionally `NAME=PATH`; repeatable.
    #[arg(long = "fit")]
    pub fits: Vec<String>,
    /// Reconstruction CSV as `NAME=PATH`; repeatable.
    #[arg(long = "recon")]
    pub recons: Vec<String>,
    /// Rows computed elsewhere, in the comparison layout.
    #[arg(long)]
    pub external: Vec<PathBuf>,
    #[arg(long, value_parser = parse_mode, default_value = "free_run")]
    pub mode: ReconstructionMode,
    #[arg(long, default_value_t = 2)]
    pub leading: usize,
    /// Comparison CSV; standard output if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Long-format CSV for plotting.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment spec (TOML).
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Comma-separated numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

pub fn parse_list(s: &str) -> Result<FloatList, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number")))
        .collect::<Result<Vec<f64>, String>>()
        .map(FloatList)
}

fn parse_method(s: &str) -> Result<Method, String> {
    Method::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
        format!("unknown method `{s}`, expected one of {}", names.join(", "))
    })
}

fn parse_scale(s: &str) -> Result<ScaleEstimatorKind, String> {
    ScaleEstimatorKind::parse(s).ok_or_else(|| format!("unknown scale estimator `{s}`, expected s1 or s2"))
}

fn parse_mode(s: &str) -> Result<ReconstructionMode, String> {
    ReconstructionMode::parse(s).ok_or_else(|| format!("unknown mode `{s}`, expected free_run or one_step"))
}

fn fields<const N: usize>(s: &str, what: &str) -> Result<[f64; N], String> {
    let v = s
        .split(':')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number")))
        .collect::<Result<Vec<f64>, String>>()?;
    v.try_into().map_err(|_| format!("{what} needs {N} colon-separated numbers"))
}

fn parse_window(s: &str) -> Result<OutlierWindow, String> {
    let [start, end, magnitude] = fields::<3>(s, "a window")?;
    Ok(OutlierWindow { start, end, magnitude })
}

fn parse_spike(s: &str) -> Result<SpikePlan, String> {
    let [mu, p, eta] = fields::<3>(s, "a spike plan")?;
    Ok(SpikePlan { mu, p, eta })
}

fn parse_noise(s: &str) -> Result<NoiseKind, String> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    let num = || arg.parse::<f64>().map_err(|_| format!("noise `{kind}` needs a numeric parameter"));
    match kind {
        "none" => Ok(NoiseKind::None),
        "gaussian" => Ok(NoiseKind::Gaussian { sigma: num()? }),
        "laplace" => Ok(NoiseKind::Laplace { variance: num()? }),
        "cauchy" => Ok(NoiseKind::Cauchy { gamma: num()? }),
        "student-t" | "student_t" | "t" => arg
            .parse::<usize>()
            .map(|dof| NoiseKind::StudentT { dof })
            .map_err(|_| "student-t needs an integer dof".to_string()),
        other => Err(format!("unknown noise kind `{other}`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_parsers() {
        assert_eq!(parse_list("1, -2.5").unwrap(), FloatList(vec![1.0, -2.5]));
        assert!(parse_list("1,x").is_err());
        assert_eq!(
            parse_window("1:1.05:0.3").unwrap(),
            OutlierWindow { start: 1.0, end: 1.05, magnitude: 0.3 }
        );
        assert!(parse_window("1:2").is_err());
        assert_eq!(parse_noise("student-t:2").unwrap(), NoiseKind::StudentT { dof: 2 });
        assert_eq!(parse_noise("laplace:0.01").unwrap(), NoiseKind::Laplace { variance: 0.01 });
        assert!(parse_noise("pink:1").is_err());
        assert_eq!(parse_method("robust-standard").unwrap(), Method::RobustStandard);
        assert!(parse_method("bogus").is_err());
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
