use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the generation and verification pipeline.
#[derive(Debug, Error)]
pub enum GcmError {
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("cannot parse cell {cell:?} at data row {row}, column {col} as a finite number")]
    ParseError { row: usize, col: usize, cell: String },

    #[error("duplicate column name {0:?}")]
    DuplicateColumnName(String),

    #[error("empty column name at position {0}")]
    EmptyColumnName(usize),

    #[error("dataset needs at least 2 data rows, found {0}")]
    EmptyBody(usize),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("column {0:?} has zero variance")]
    ZeroVarianceColumn(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("matrix is not positive semi-definite (Cholesky failed at jitter {max_jitter:e})")]
    NotPositiveSemiDefinite { max_jitter: f64 },

    #[error("eigenvalue iteration did not converge after {0} rotations")]
    ConvergenceFailure(usize),

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("noise sample is degenerate: {0}")]
    DegenerateNoise(String),

    #[error("exact mode needs more rows than columns (rows = {rows}, columns = {cols})")]
    ExactModeRankError { rows: usize, cols: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid correlation matrix: {0}")]
    InvalidMatrix(String),

    #[error("column mismatch between source and synthetic: {0}")]
    ColumnMismatch(String),

    #[error("invalid order: {0}")]
    InvalidOrder(String),

    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GcmError>;

impl GcmError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GcmError::Io {
            path: path.into(),
            source,
        }
    }
}
