use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the gearline pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("invalid band {low_hz}..{high_hz} Hz for sample rate {sample_rate_hz} Hz")]
    InvalidBand {
        low_hz: f64,
        high_hz: f64,
        sample_rate_hz: f64,
    },

    #[error("signal too short: need more than {required} samples, got {actual}")]
    SignalTooShort { required: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("not enough samples: need at least {required}, got {actual}")]
    NotEnoughSamples { required: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("zero variance in training data")]
    ZeroVariance,

    #[error("duplicate feature name `{0}`")]
    NameCollision(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("measurement rejected: {0}")]
    Measurement(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("bundle error: {0}")]
    Bundle(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("wav error in {path}: {message}")]
    Wav { path: PathBuf, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
