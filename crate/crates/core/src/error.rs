use thiserror::Error;

/// Errors surfaced by the clustering library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite coordinate at point {index}")]
    NonFinite { index: usize },
    #[error("unsplittable block")]
    UnsplittableBlock,
    #[error("orphan point {index}")]
    OrphanPoint { index: usize },
    #[error("no centroids requested (k = 0)")]
    ZeroK,
    #[error("need at least {k} representatives, have {available}")]
    TooFewPoints { k: usize, available: usize },
    #[error("stale assignment cache: {cache} entries for {cells} cells")]
    StaleCache { cache: usize, cells: usize },
    #[error("distance budget exhausted")]
    BudgetExhausted,
    #[error("converged: boundary is empty")]
    Converged,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("guard violation: {0}")]
    Guard(String),
    #[error("relative error needs positive finite errors, got {value} for {method}")]
    NonPositiveError { method: String, value: f64 },
    #[error("{context}: {message}")]
    Io { context: String, message: String },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(context: impl Into<String>, err: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            message: err.to_string(),
        }
    }
}
