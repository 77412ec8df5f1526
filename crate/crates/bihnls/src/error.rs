use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("cutoff construction failed: {0}")]
    Cutoff(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("unknown preset `{name}`; available: {available}")]
    UnknownPreset { name: String, available: String },

    #[error("ground state did not converge after {iterations} iterations (last residual {last_residual:.3e})")]
    GroundStateNoConvergence {
        iterations: usize,
        last_residual: f64,
        residual_history: Vec<f64>,
    },

    #[error("ground state iteration collapsed to the trivial attractor; retry with a larger initial amplitude")]
    TrivialAttractor,

    #[error("threshold quantities require 0 < s_c < 2, got s_c = {0}")]
    ThresholdRange(f64),

    #[error("diagnostic precondition: {0}")]
    Diagnostics(String),

    #[error("checkpoint {path}: bad magic")]
    CheckpointMagic { path: PathBuf },

    #[error("checkpoint {path}: unsupported version {found} (expected {expected})")]
    CheckpointVersion {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("checkpoint {path}: truncated ({found} bytes, expected {expected})")]
    CheckpointTruncated {
        path: PathBuf,
        found: usize,
        expected: usize,
    },

    #[error("checkpoint {path}: {section} checksum mismatch")]
    CheckpointChecksum { path: PathBuf, section: &'static str },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
