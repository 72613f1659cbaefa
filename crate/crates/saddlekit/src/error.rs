use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-compact set has no diameter")]
    NonCompact,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("inner loop failed to reach tolerance {tol} within {iters} iterations (residual {residual})")]
    NonConvergence {
        iters: usize,
        tol: f64,
        residual: f64,
    },

    #[error("best-response outer loop cap exceeded: best value {value}, residual {residual}")]
    BestResponseCap { value: f64, residual: f64 },

    #[error("singular linear system")]
    SingularSystem,

    #[error("missing constant for step-size rule: {0}")]
    MissingConstant(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
