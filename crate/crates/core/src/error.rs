use thiserror::Error;

/// Errors raised by program construction, evaluation and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input length {got} does not match program arity {expected}")]
    InputShape { expected: usize, got: usize },

    #[error("arity mismatch: {left} vs {right}")]
    ArityMismatch { left: usize, right: usize },

    #[error("invalid order: {0}")]
    InvalidOrder(String),

    #[error("invalid program: {0}")]
    InvalidProgram(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} {value} exceeds cap {cap}")]
    CapExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },

    #[error("index {index} out of range 1..={max}")]
    OutOfRange { index: usize, max: usize },

    #[error(
        "no good set for m={m}, epsilon={epsilon} after {attempts} attempts \
         (best worst-case value {best_value:.6} at g={best_g})"
    )]
    GoodSetSearch {
        m: u64,
        epsilon: f64,
        attempts: usize,
        best_value: f64,
        best_g: u64,
        best_k: Vec<u64>,
    },

    #[error("program is not commutative; refusing to reorder")]
    NotCommutative,

    #[error("unknown {kind}: {name}")]
    Unknown { kind: &'static str, name: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
