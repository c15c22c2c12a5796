use alloc::string::String;

/// Errors produced by the numerical core.
///
/// The variants line up with the exit classes of the command-line runner:
/// configuration problems, numeric failures and iteration non-convergence.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("grid mismatch: {0}")]
    Shape(String),
    #[error("non-finite value: {0}")]
    NumericDomain(String),
    #[error("numeric failure at step {step}: {what}")]
    NumericFailure { step: usize, what: String },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("resolvent is singular at lambda = {lambda} (mode {mode:?})")]
    Pole { lambda: f64, mode: [i64; 2] },
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = core::result::Result<T, Error>;
