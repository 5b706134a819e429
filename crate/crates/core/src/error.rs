use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("pole of the gamma function at {re}+{im}i")]
    Pole { re: f64, im: f64 },

    #[error("numerically singular matrix (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    /// A documented precondition of the operation does not hold.
    #[error("precondition refused: {0}")]
    Refused(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("overflow at step {step}: {detail}")]
    Overflow { step: usize, detail: String },
}

impl Error {
    pub(crate) fn refused(msg: impl Into<String>) -> Self {
        Error::Refused(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, got })
        }
    }
}
