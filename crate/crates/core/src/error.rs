use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("degenerate geometry at triangle {triangle}: {reason}")]
    Geometry { triangle: usize, reason: String },

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("capability missing: {0}")]
    Capability(String),

    #[error("line search stagnated after {iterations} iterations (energy {energy})")]
    Stagnation {
        iterations: usize,
        energy: f64,
        /// Last accepted iterate.
        iterate: Vec<f64>,
    },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
