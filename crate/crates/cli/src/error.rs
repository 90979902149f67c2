use thiserror::Error;

/// Failures the driver reports on standard error before exiting with
/// code 2. Statistical check failures are not errors; they surface as
/// a fail verdict and exit code 1 under --check.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Campaign(#[from] concentrate_core::Error),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
