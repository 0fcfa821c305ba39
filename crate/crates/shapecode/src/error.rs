//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the retrieval pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A text input (OFF/OBJ mesh, `.cla` labels, config file) failed to parse.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Mesh geometry unusable for pose normalization (e.g. zero total area).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// Operands have inconsistent shapes.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A training run produced non-finite parameters.
    #[error("training diverged: {0}")]
    TrainingDiverged(String),

    /// A value violates its documented domain (probability outside [0,1],
    /// zero camera counts, empty input set, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Configuration value out of range or inconsistent.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Binary artifact on disk is malformed or has the wrong version.
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    /// A pipeline stage found its recorded inputs changed since the artifact
    /// was built; rerun with `--force` to rebuild.
    #[error("stale inputs for stage {stage}: {detail} (rerun with --force)")]
    StaleInputs { stage: String, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
