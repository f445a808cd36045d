use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown name `{0}`")]
    UnknownName(String),

    #[error("malformed parameter in `{spec}`: {reason}")]
    MalformedParameter { spec: String, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("curve is not Lipschitz near t = {t}")]
    NotLipschitz { t: f64 },

    #[error("curve has zero length")]
    ZeroLength,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("limit did not converge: {0}")]
    NonConvergent(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
