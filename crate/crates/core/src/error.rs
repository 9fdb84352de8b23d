use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("potential is not admissible: {0}")]
    Inadmissible(String),

    #[error("length mismatch: expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("state outside the admissible domain at node {node}: {reason}")]
    Domain { node: usize, reason: String },

    /// The fixed-point update needs `A > 0` at every node.
    #[error("fixed-point step rejected: dF/dgamma = {value:e} <= 0 at node {node}")]
    NonPositiveA { node: usize, value: f64 },

    #[error("line search stagnated below step {step:e}")]
    Stagnation { step: f64 },

    #[error("grid mismatch: file was written on {found}, expected {expected}")]
    GridMismatch { expected: String, found: String },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
