use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("pyramid depth: {0}")]
    PyramidDepth(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("empty mask or support: {0}")]
    EmptySupport(String),

    #[error("parameter vector length {got} does not match model ({expected})")]
    LengthMismatch { expected: usize, got: usize },

    #[error("point count mismatch: {0} vs {1}")]
    CountMismatch(usize, usize),

    #[error("label {0} is absent from both volumes")]
    BothEmpty(u32),

    #[error("non-finite objective: {0}")]
    NonFinite(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("{path}: missing header key `{key}`")]
    MissingKey { path: PathBuf, key: String },

    #[error("{path}: payload holds {actual} bytes but header implies {expected}")]
    SizeMismatch { path: PathBuf, expected: u64, actual: u64 },

    #[error("unsupported element type `{0}`")]
    UnsupportedElementType(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse error classes, used by the command line for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parameter(_) | Error::Config(_) => ErrorClass::Usage,
            Error::NonFinite(_) | Error::UndefinedMetric(_) => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
