use thiserror::Error;

/// Failures raised by the analysis, shadowing and oracle routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A bound was requested outside the parameter range where it is defined.
    #[error("outside hypothesis: {0}")]
    OutOfHypothesis(String),

    /// The measured error exceeds a bound that must hold for a correctly
    /// classified system.
    #[error("hypothesis violated: measured sup error {measured:e} exceeds sound bound {bound:e}")]
    HypothesisViolation { measured: f64, bound: f64 },

    #[error("epsilon too large for the fixed-point construction: {0}")]
    EpsilonTooLarge(String),

    #[error("fixed-point iteration did not converge within {iterations} iterations (last change {last_change:e})")]
    NotConverged { iterations: usize, last_change: f64 },

    #[error("degenerate difference quotient at n = {n}")]
    DegenerateQuotient { n: usize },

    #[error("non-finite value at n = {n}")]
    Overflow { n: usize },

    #[error("no divergence witness available: {0}")]
    NoDivergence(String),

    #[error("classification is {found}, {reason}")]
    ClassificationMismatch { found: String, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
