use thiserror::Error;

/// Crate-wide error type. The variants map onto the failure classes the
/// operations distinguish: bad shapes, bad values, violated preconditions,
/// exhausted iteration budgets and resource caps, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("resource budget exceeded: {0}")]
    Budget(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
