use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the robust DMD stack.
#[derive(Debug, Error)]
pub enum RdmdError {
    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("rank deficiency: {0}")]
    RankDeficient(String),

    #[error("requested rank {requested} exceeds numerical rank {numerical}")]
    Truncation { requested: usize, numerical: usize },

    #[error("robustness condition violated: reduced order {reduced} must be below state dimension {state}")]
    RobustnessCondition { reduced: usize, state: usize },

    #[error("integration diverged at step {step}")]
    Divergence { step: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl RdmdError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RdmdError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, RdmdError>;
