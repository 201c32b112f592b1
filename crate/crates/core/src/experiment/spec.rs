use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::SCHEMA_VERSION;
use crate::error::{RdmdError, Result};
use crate::estimators::{FitOptions, HuberConfig, Method};
use crate::modal::ReconstructionMode;
use crate::robust_stats::{ScaleEstimatorKind, DEFAULT_QUANTILE};
use crate::systems::{derive_seed, BenchmarkSystem, ContaminationPlan, NoiseKind, OutlierWindow, SpikePlan, SystemParams};

/// An experiment as written by a user (TOML). Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    /// Master seed; every random stage derives its own stream from it.
    pub seed: u64,
    pub system: SystemSpec,
    pub contamination: ContaminationSpec,
    pub fit: FitSpec,
    pub reconstruct: ReconstructSpec,
    pub compare: CompareSpec,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            name: "experiment".into(),
            seed: 0,
            system: SystemSpec::default(),
            contamination: ContaminationSpec::default(),
            fit: FitSpec::default(),
            reconstruct: ReconstructSpec::default(),
            compare: CompareSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSpec {
    pub name: String,
    pub dt: f64,
    pub steps: usize,
    pub x0: Option<Vec<f64>>,
    pub s: Option<usize>,
    pub m: Option<usize>,
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    pub damping: Option<f64>,
    pub literal: bool,
    /// Seed of randomly drawn systems; derived from the master seed if absent.
    pub seed: Option<u64>,
}

impl Default for SystemSpec {
    fn default() -> Self {
        SystemSpec {
            name: "linear2x2".into(),
            dt: 0.01,
            steps: 500,
            x0: None,
            s: None,
            m: None,
            mu: None,
            lambda: None,
            damping: None,
            literal: false,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ContaminationSpec {
    pub gaussian_sigma: f64,
    pub noise: NoiseKind,
    pub windows: Vec<OutlierWindow>,
    pub spike: Option<SpikePlan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSpec {
    pub methods: Vec<Method>,
    pub delta: f64,
    pub b: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub bm: f64,
    pub gamma: f64,
    pub freeze_scale: bool,
    pub scale: ScaleEstimatorKind,
    pub dof: Option<usize>,
    pub quantile: f64,
    pub rank: Option<usize>,
    pub unit_weights: bool,
}

impl Default for FitSpec {
    fn default() -> Self {
        let h = HuberConfig::default();
        FitSpec {
            methods: vec![Method::Dmd, Method::Krdmd, Method::Nrdmd],
            delta: h.delta,
            b: h.b,
            tol: h.irls_tol,
            max_iter: h.max_iter,
            bm: h.bm,
            gamma: h.gamma,
            freeze_scale: h.freeze_scale,
            scale: ScaleEstimatorKind::default(),
            dof: None,
            quantile: DEFAULT_QUANTILE,
            rank: None,
            unit_weights: false,
        }
    }
}

impl FitSpec {
    pub fn huber(&self) -> HuberConfig {
        HuberConfig {
            delta: self.delta,
            b: self.b,
            irls_tol: self.tol,
            max_iter: self.max_iter,
            bm: self.bm,
            gamma: self.gamma,
            freeze_scale: self.freeze_scale,
        }
    }

    pub fn options(&self) -> FitOptions {
        FitOptions {
            huber: self.huber(),
            scale: self.scale,
            dof: self.dof,
            quantile: Some(self.quantile),
            rank: self.rank,
            unit_weights: self.unit_weights,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(RdmdError::Config("fit.methods is empty".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(RdmdError::Config(format!("method {m} listed twice")));
            }
        }
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return Err(RdmdError::Config(format!("quantile must lie in (0, 1), got {}", self.quantile)));
        }
        if self.dof == Some(0) || self.rank == Some(0) {
            return Err(RdmdError::Config("dof and rank must be positive".into()));
        }
        self.huber().validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructSpec {
    pub mode: ReconstructionMode,
    /// Defaults to the simulated horizon.
    pub steps: Option<usize>,
}

impl Default for ReconstructSpec {
    fn default() -> Self {
        ReconstructSpec { mode: ReconstructionMode::FreeRun, steps: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSpec {
    /// Number of leading continuous eigenvalues in the comparison table.
    pub leading: usize,
}

impl Default for CompareSpec {
    fn default() -> Self {
        CompareSpec { leading: 2 }
    }
}

/// An experiment with every default and derived seed filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSpec {
    pub schema_version: u32,
    pub name: String,
    pub seed: u64,
    pub system: BenchmarkSystem,
    pub dt: f64,
    pub steps: usize,
    pub x0: Vec<f64>,
    pub contamination: ContaminationPlan,
    pub fit: FitSpec,
    pub reconstruct_mode: ReconstructionMode,
    pub reconstruct_steps: usize,
    pub leading: usize,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| RdmdError::Config(format!("experiment spec: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| RdmdError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Fills defaults and validates everything that can be checked
    /// without running.
    pub fn resolve(&self) -> Result<ResolvedSpec> {
        let sys = &self.system;
        let params = SystemParams {
            s: sys.s,
            m: sys.m,
            mu: sys.mu,
            lambda: sys.lambda,
            damping: sys.damping,
            literal: sys.literal,
            seed: sys.seed.unwrap_or_else(|| derive_seed(self.seed, "system")),
        };
        let system = BenchmarkSystem::from_name(&sys.name, &params)?;
        if !(sys.dt > 0.0 && sys.dt.is_finite()) {
            return Err(RdmdError::Config(format!("system.dt must be positive, got {}", sys.dt)));
        }
        if sys.steps < 2 {
            return Err(RdmdError::Config("system.steps must be at least 2".into()));
        }
        let x0 = match &sys.x0 {
            Some(v) => {
                if v.len() != system.dim() {
                    return Err(RdmdError::Config(format!(
                        "x0 has {} entries, {} has dimension {}",
                        v.len(),
                        system.name(),
                        system.dim()
                    )));
                }
                v.clone()
            }
            None => system.default_x0().iter().copied().collect(),
        };
        let c = &self.contamination;
        let contamination = ContaminationPlan {
            gaussian_sigma: c.gaussian_sigma,
            noise: c.noise,
            windows: c.windows.clone(),
            spike: c.spike,
            seed: self.seed,
        };
        contamination.validate()?;
        self.fit.validate()?;
        let reconstruct_steps = self.reconstruct.steps.unwrap_or(sys.steps);
        if reconstruct_steps == 0 || reconstruct_steps > sys.steps {
            return Err(RdmdError::Config(format!(
                "reconstruct.steps must lie in 1..={}, got {reconstruct_steps}",
                sys.steps
            )));
        }
        if self.compare.leading == 0 {
            return Err(RdmdError::Config("compare.leading must be positive".into()));
        }
        Ok(ResolvedSpec {
            schema_version: SCHEMA_VERSION,
            name: self.name.clone(),
            seed: self.seed,
            system,
            dt: sys.dt,
            steps: sys.steps,
            x0,
            contamination,
            fit: self.fit.clone(),
            reconstruct_mode: self.reconstruct.mode,
            reconstruct_steps,
            leading: self.compare.leading,
        })
    }
}

impl ResolvedSpec {
    pub fn x0(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.x0)
    }

    /// Canonical (compact JSON) form; the hash is taken over these bytes.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    /// Lowercase hex SHA-256 of [`ResolvedSpec::canonical`].
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
