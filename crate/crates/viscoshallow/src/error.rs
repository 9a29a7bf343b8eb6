use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum SolverError {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An element or coefficient index was out of range.
    #[error("index out of range: {0}")]
    OutOfRange(String),

    /// The solution state is physically invalid (e.g. non-positive depth).
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// The linear system could not be factorized.
    #[error("linear solver failure: {0}")]
    Singular(String),

    /// An iterative numeric procedure failed to converge.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, SolverError>;
