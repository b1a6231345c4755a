use thiserror::Error;

/// Errors raised by configuration validation, estimators, and log I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A physical or run parameter violates its invariant.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// An input lies outside the domain of the requested quantity.
    #[error("out of range: {0}")]
    OutOfRange(String),
    /// The requested statistic is undefined for these inputs.
    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),
    /// Too little data to run the requested test or estimator.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// The fit cannot be performed or produced an unphysical result.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    /// Timing/geometry parameters contradict each other or fail the
    /// space-like separation requirement.
    #[error("inconsistent geometry: {0}")]
    InconsistentGeometry(String),
    /// A persisted event log is malformed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
