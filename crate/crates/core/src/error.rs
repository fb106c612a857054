use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// The feasibility solver gave up (iteration cap) without a verdict.
    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// An algorithmic precondition failed at run time, e.g. a value below
    /// the level it is compared against.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("detector window exceeded {cap} entries without triggering")]
    WindowLimit { cap: usize },

    #[error("parse error at line {line}, token {offset}: {message}")]
    Parse {
        line: usize,
        offset: usize,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse {
            line: err.line(),
            offset: err.column(),
            message: err.to_string(),
        }
    }
}
