use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Bad dimensions, out-of-range indices, or invalid configuration.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A mathematical precondition does not hold (singular block, degenerate data).
    #[error("condition violated: {0}")]
    Condition(String),

    /// Numerical breakdown during an iteration.
    #[error("numeric failure: {message}")]
    Numeric {
        message: String,
        /// Working support (0-based) at the time of failure, when known.
        support: Option<Vec<usize>>,
        /// Best estimate available before the failure, when meaningful.
        partial: Option<f64>,
    },

    /// Malformed input file. Line numbers are 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric {
            message: msg.into(),
            support: None,
            partial: None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
