use thiserror::Error;

/// Errors produced by the calibration library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A sample, grid or value failed validation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A fit was requested with no samples.
    #[error("no data: at least one sample is required")]
    NoData,

    /// A map was queried before anything was fitted.
    #[error("no model: the calibration map is empty")]
    NoModel,

    /// An ordered stream received a score below the previous one.
    #[error("ordering violation: score {score} arrived after {last}")]
    OrderingViolation { score: f64, last: f64 },

    /// Two summaries handed to a merge overlap in score.
    #[error("structural error: {0}")]
    Structural(String),

    /// An exhaustive search would exceed its guard.
    #[error("instance too large: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;
