//! Command-line front end: scenario ingestion, admissibility checks, run
//! orchestration, and artifact emission.

use std::path::PathBuf;

use thiserror::Error;

pub mod commands;
pub mod demo;
pub mod output;
pub mod scenario;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    /// Malformed scenario file; the source error carries line and column.
    #[error("parse error in {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },

    /// Well-formed file that violates a standing assumption.
    #[error("validation failed:\n{0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] avecon::Error),
}
