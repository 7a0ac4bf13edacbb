use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SomError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SomError {
    #[error("coordinate ({row}, {col}) is outside a {rows}x{cols} grid")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unsupported model format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("csv error in {path}: row {row}, column {col}: {message}")]
    CsvCell {
        path: PathBuf,
        row: usize,
        col: usize,
        message: String,
    },

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SomError {
    /// True for errors caused by user input rather than a bug or environment
    /// failure. The CLI maps these to exit code 2.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, SomError::Io(_))
    }
}
