use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid exponent p = {0}")]
    InvalidExponent(f64),

    #[error("weights must be strictly positive (index {index}: {value})")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("grid oracle limited to real dimension {cap}, requested {requested}")]
    DimensionCap { cap: usize, requested: usize },

    #[error("representation cap exceeded: {0}")]
    CapExceeded(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty partition cell at index {0}")]
    EmptyCell(usize),

    #[error("functional does not vanish on the quotient kernel (residual {0:.3e})")]
    NotAnnihilating(f64),

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Malformed(e.to_string())
    }
}
