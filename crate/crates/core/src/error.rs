use thiserror::Error;

/// Errors raised by the dynamics, objective and optimizer layers.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum OctError {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("time grids do not match ({context})")]
    GridMismatch { context: &'static str },

    #[error("field array `{name}` has length {actual}, expected {expected}")]
    FieldLength {
        name: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("field array `{name}` contains a non-finite value at node {index}")]
    NonFiniteField { name: &'static str, index: usize },

    #[error("initial state is not normalized (norm^2 = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

pub type Result<T, E = OctError> = std::result::Result<T, E>;
