use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("variable count mismatch: {left} vs {right}")]
    VariableCountMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("zero polynomial not allowed as {0}")]
    ZeroPolynomial(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid constellation: {0}")]
    InvalidSpec(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("relaxation order {given} is too small; minimal admissible order is {minimal}")]
    OrderTooSmall { given: u32, minimal: u32 },

    #[error("grid needs {required} cells but the budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("ideal is not trivial; no certificate of 1 exists")]
    NotTrivial,

    #[error("cofactor tracking was not enabled for this run")]
    NoCofactors,

    #[error("malformed SDPA data: {0}")]
    Sdpa(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
