use thiserror::Error;

/// Errors raised by the solver library.
///
/// The variants map onto the CLI exit-code contract: [`Error::Config`] is a
/// configuration problem, [`Error::Precondition`] a violated precondition, and
/// [`Error::NotConverged`] an exhausted iteration budget.
#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid problem instance: {0}")]
    InvalidInstance(String),

    #[error("boundary leakage {ratio:.3e} exceeds {threshold:.1e} ({what})")]
    Leakage { what: String, ratio: f64, threshold: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("not converged after {iterations} iterations: {detail}")]
    NotConverged { iterations: usize, detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}
