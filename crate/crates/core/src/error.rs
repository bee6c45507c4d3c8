use thiserror::Error;

/// Errors raised by estimators, simulators and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sample is empty")]
    EmptySample,

    #[error("non-finite values at indices {indices:?}")]
    NonFinite { indices: Vec<usize> },

    #[error("model is not stationary: {0}")]
    NonStationary(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no convergence after {iterations} iterations (last sup-change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },

    #[error("evaluation grid: {0}")]
    Grid(String),

    #[error("degenerate fit: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} must be finite, got {x}")))
    }
}
