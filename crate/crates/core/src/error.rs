use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the model, the integrator and the run driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field has {got} samples but the grid has {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("unsupported derivative order {0} (expected 1, 2 or 3)")]
    DerivativeOrder(u8),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("nonpositive-thickness: h = {value} at node {index}")]
    NonPositiveThickness { index: usize, value: f64 },

    #[error("state-out-of-physical-range: {0}")]
    OutOfRange(String),

    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("missing required config keys: {}", .0.join(", "))]
    MissingKeys(Vec<String>),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("snapshot {path}: {message}")]
    Snapshot { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
