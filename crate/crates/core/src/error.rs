use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    /// A data row failed to parse or violated a record invariant. `row` is the
    /// 1-based data row number (the header is not counted).
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("conflict: {0}")]
    Conflict(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("unit error in slot `{slot}`: {message}")]
    Unit { slot: String, message: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("completion client error: {0}")]
    Client(String),

    #[error("all {attempts} attempts failed validation and no analogs are available for fallback")]
    NoFallback { attempts: usize },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from bad input (exit status 2) rather than a
    /// runtime failure (exit status 1).
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::Client(_) | Error::NoFallback { .. } | Error::Degenerate(_)
        )
    }
}
