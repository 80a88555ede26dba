use std::path::PathBuf;

/// Errors produced by the analysis pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid window length {m} for series of length {n}")]
    InvalidWindowLength { m: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("no valid neighbor: {l} subsequences with exclusion zone {exclusion_zone}")]
    NoValidNeighbor { l: usize, exclusion_zone: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed profile: index {index} at position {position} (profile length {l})")]
    MalformedProfile {
        position: usize,
        index: usize,
        l: usize,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("series of length {n} too short to trim {burn_in} samples per end with window {m}")]
    InvalidTrim { n: usize, burn_in: usize, m: usize },

    #[error("non-finite sample at position {0}")]
    NonFinite(usize),

    #[error("{path}: row {row}: {message}")]
    Ingestion {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Column { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad parameters rather than bad data.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidWindowLength { .. } | Error::InvalidTrim { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
