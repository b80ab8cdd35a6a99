//! Error type shared by every solver and analysis routine.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure categories surfaced by the library.
///
/// `Convergence` carries the residual history so callers can inspect how a
/// solve stalled; everything else is a contract violation detected up front.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input had the wrong number of components for the requested dimension.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An input value lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Sampled validation of a structural hypothesis failed.
    #[error("validation failed: {0}")]
    Validation(String),

    /// An iterative solve did not reach its tolerance within the iteration cap.
    #[error("did not converge: {message} (last residuals {residuals:?})")]
    Convergence {
        message: String,
        /// Trailing residual history, most recent last.
        residuals: Vec<f64>,
    },
}

impl Error {
    /// Builds a convergence error keeping at most the last eight residuals.
    pub fn convergence(message: impl Into<String>, history: &[f64]) -> Self {
        let tail = history.len().saturating_sub(8);
        Error::Convergence {
            message: message.into(),
            residuals: history[tail..].to_vec(),
        }
    }
}
