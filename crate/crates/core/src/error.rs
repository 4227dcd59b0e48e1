use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vectors live on different spaces")]
    SpaceMismatch,
    #[error("index {index} out of range for space of {n} points")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("negative mass {value} at index {index}")]
    Negative { index: usize, value: f64 },
    #[error("order interval is empty (lo > hi at index {0})")]
    EmptyInterval(usize),
    #[error("precondition violated at index {index}: {reason}")]
    Precondition { index: usize, reason: String },
    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("unbalanced input: masses {mu} and {nu} differ")]
    Unbalanced { mu: f64, nu: f64 },
    #[error("null measure: {0}")]
    NullMeasure(&'static str),
    #[error("zero reference mass at index {0} where the marginal has mass")]
    ZeroReference(usize),
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("pivot limit of {0} exceeded")]
    PivotLimit(usize),
    #[error("grid has {points} points, limit is {limit}")]
    GridTooLarge { points: usize, limit: usize },
    #[error("functional is +inf on every grid point")]
    InfiniteOnGrid,
    #[error("sampler exhausted after {0} draws")]
    SamplerExhausted(usize),
    #[error("evaluation hit +inf inside the stencil at point {0}")]
    InfiniteStencil(usize),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
