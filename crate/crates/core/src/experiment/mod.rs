//! Spec-driven experiments: simulate, contaminate, fit, reconstruct and
//! compare, with every output reproducible from the resolved spec.

mod compare;
mod run;
mod spec;

pub use compare::{check_horizon, comparison_csv, parse_external, plot_csv, ComparisonRow};
pub use run::{run_experiment, ManifestMethod, MethodTiming, RunManifest, Timings};
pub use spec::{
    CompareSpec, ContaminationSpec, ExperimentSpec, FitSpec, ReconstructSpec, ResolvedSpec, SystemSpec,
};

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{RdmdError, Result};
use crate::snapshots::write_text;

/// Version stamped into every JSON output.
pub const SCHEMA_VERSION: u32 = 1;

/// A JSON document with a `schema_version` field next to the payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versioned<T> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Versioned<T> {
    pub fn new(body: T) -> Self {
        Versioned { schema_version: SCHEMA_VERSION, body }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes `body` wrapped with the schema version.
pub fn write_versioned<T: Serialize>(path: impl AsRef<Path>, body: &T) -> Result<()> {
    write_text(path, &to_json(&Versioned::new(body))?)
}

/// Reads a document written by [`write_versioned`].
pub fn read_versioned<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| RdmdError::io(path, e))?;
    let doc: Versioned<T> = serde_json::from_str(&text)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(RdmdError::MalformedInput(format!(
            "{} has schema_version {}, expected {SCHEMA_VERSION}",
            path.display(),
            doc.schema_version
        )));
    }
    Ok(doc.body)
}
