use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DyadicError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("cube at level {level} cannot be refined below grid depth {depth}")]
    LevelOverflow { level: u32, depth: u32 },

    #[error("{0} is finer than the grid can resolve")]
    Unresolvable(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("scaling factor a^(-d/p) = 2^({numer}/{denom}) is not representable in Q(sqrt 2)")]
    UnsupportedExponent { numer: i64, denom: i64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource cap exceeded: {what} = {size} > {cap}")]
    CapExceeded { what: &'static str, size: usize, cap: usize },

    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    NoConvergence { iterations: usize, estimate: f64 },
}

pub type Result<T, E = DyadicError> = std::result::Result<T, E>;
