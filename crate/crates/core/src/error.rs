use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    /// Every quadratic-transform scalar vanished, so the precoder normal
    /// matrix is singular. The caller should restart from a fresh precoder.
    #[error("degenerate precoder state: all beta coefficients are zero")]
    DegeneratePrecoder,

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("oracle refused instance: {0}")]
    OracleGuard(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("could not parse {path}: {message}")]
    Parse { path: String, message: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
