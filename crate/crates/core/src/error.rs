use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("coordinate vector has length {got}, family dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not in the span of the {family} family (residual {residual:e})")]
    NotInFamily { family: String, residual: f64 },

    #[error("matrix is not a density matrix: {0}")]
    NotAState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("interval shrinking did not find an interior point within {0} draws")]
    ShrinkLimitExceeded(u32),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot merge estimates: {0}")]
    Merge(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
