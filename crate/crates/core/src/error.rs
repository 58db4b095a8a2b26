use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by graph construction, the protocols and the bench harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("unsupported metric: {0}")]
    UnsupportedMetric(String),

    #[error("incomplete formation spec: no offset for edge ({0}, {1})")]
    IncompleteSpec(usize, usize),

    #[error("malformed formation spec: {0}")]
    MalformedSpec(String),

    #[error("formation is not valid: offsets around edge ({0}, {1}) are inconsistent")]
    FormationInvalid(usize, usize),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
