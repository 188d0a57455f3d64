use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model parameter violates one of its invariants. The message names it.
    #[error("{0}")]
    InvalidParam(String),

    #[error("nothing to probe (m_A = 0)")]
    NothingToProbe,

    #[error("simulator requires strictly positive return-channel noise: {0}")]
    ReturnNoise(&'static str),

    #[error("one-way probing required (m_A > 0 and m_B > 0)")]
    OneWayRequired,

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("secrecy formula outside stated regime: {0}")]
    OutsideRegime(String),

    #[error("covariance is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("requested key length {requested} exceeds the maximum of {max} bits")]
    KeyTooLong { requested: usize, max: usize },

    #[error("reconciliation failed: {0}")]
    ReconciliationFailed(String),

    #[error("config: {0}")]
    Config(String),

    #[error("malformed transcript: {0}")]
    Transcript(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
