use thiserror::Error;

/// Errors raised by construction, evaluation and coding routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("block length {0} is not a power of two >= 2")]
    InvalidLength(usize),
    #[error("value {value} outside domain {domain}")]
    Domain { value: f64, domain: &'static str },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("divergence undefined: p has mass outside support of q at index {0}")]
    DivergenceUndefined(usize),
    #[error("exact enumeration too large: {states} states exceeds guard {guard}")]
    TooLarge { states: u128, guard: u128 },
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("encoder block error at column {column}")]
    EncoderBlock { column: usize },
    #[error("message length mismatch: expected {expected}, got {got}")]
    MessageLength { expected: usize, got: usize },
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
