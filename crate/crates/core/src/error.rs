use thiserror::Error;

/// Errors raised by the factorization, update and tracking routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("non-finite value encountered at step {step}")]
    NonFinite { step: usize },

    #[error("Jacobi SVD did not converge after {sweeps} sweeps (off-diagonal {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error(
        "bound check failed at rank {rank}: {lower:e} <= {exact:e} <= {upper:e} does not hold"
    )]
    BoundViolation {
        rank: usize,
        lower: f64,
        exact: f64,
        upper: f64,
    },

    #[error("singular triangular block at position {0}")]
    Singular(usize),

    #[error("operation called out of order: {0}")]
    OutOfOrder(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures caused by floating-point behaviour rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::NoConvergence { .. }
                | Error::Singular(_)
                | Error::BoundViolation { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
