use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum GiatError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}: {msg}")]
    Csv {
        path: PathBuf,
        row: usize,
        msg: String,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("curve names do not match: expected {expected:?}, found {found:?}")]
    CurveMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("unknown label {label:?} (catalog: {catalog:?})")]
    UnknownLabel { label: String, catalog: Vec<String> },

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("sequence {well_id} is unlabeled")]
    Unlabeled { well_id: String },

    #[error("unknown well {id:?} (available: {available:?})")]
    UnknownWell { id: String, available: Vec<String> },

    #[error("well {0:?} appears more than once")]
    DuplicateWell(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("degenerate variance in {0}")]
    DegenerateVariance(&'static str),

    #[error("catalog mismatch: {0}")]
    CatalogMismatch(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = GiatError> = std::result::Result<T, E>;

impl GiatError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GiatError::Io {
            path: path.into(),
            source,
        }
    }
}
