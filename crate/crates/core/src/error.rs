use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("k = {k} exceeds the {available} usable data points")]
    Cardinality { k: usize, available: usize },

    #[error("degenerate sample: zero nearest-neighbor distance at query {index}")]
    DegenerateSample { index: usize },

    #[error("point {index} lies outside the unit cube")]
    Support { index: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numerical failure: {message} (achieved error bound {achieved:e})")]
    Numeric { message: String, achieved: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
