use thiserror::Error;

/// Error type shared by every fallible operation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    /// Two operands live on different cutoffs, or a matrix has the wrong shape.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// A parameter lies outside its physical domain.
    #[error("out of range: {0}")]
    OutOfRange(String),
    /// The Fock window is too small to represent the requested object.
    #[error("cutoff too small: {0}")]
    CutoffTooSmall(String),
    /// A root finder or solver had no solution in its bracket.
    #[error("no solution: {0}")]
    NoSolution(String),
    /// An experiment configuration failed validation.
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
