use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("search failed: {0}")]
    SearchFailed(String),

    /// Grid amplitude reached the boundary of a periodic grid.
    #[error("wraparound: boundary amplitude {boundary:e} exceeds {limit:e} of peak")]
    Wraparound { boundary: f64, limit: f64 },

    /// Two independent evaluations of the same quantity disagree.
    #[error("{what}: paths differ by {diff:e} (tolerance {tolerance:e})")]
    Disagreement {
        what: String,
        diff: f64,
        tolerance: f64,
    },

    #[error("estimator undefined: {0}")]
    EstimatorUndefined(String),

    /// Configuration rejected before any computation ran.
    #[error("invalid config field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            message: message.into(),
        }
    }
}
