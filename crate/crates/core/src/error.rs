//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the inputs was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A required matrix block is (numerically) rank deficient.
    #[error("rank deficiency in {block}: {detail}")]
    RankDeficient { block: String, detail: String },

    /// A decomposition or iteration lost numerical validity.
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    /// An iterative solver hit its iteration cap before meeting tolerance.
    /// Carries the last iterate so callers can inspect or resume.
    #[error("no convergence in {context} within the iteration cap")]
    Convergence {
        context: String,
        last_iterate: Vec<f64>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn breakdown(msg: impl Into<String>) -> Self {
        Error::NumericalBreakdown(msg.into())
    }

    pub(crate) fn rank(block: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::RankDeficient {
            block: block.into(),
            detail: detail.into(),
        }
    }
}
