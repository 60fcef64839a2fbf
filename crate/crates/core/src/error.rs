use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to open {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("unexpected header {found:?}, expected {expected:?}")]
    Header { found: Vec<String>, expected: Vec<String> },
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("records belong to more than one device ({0} and {1})")]
    MixedDevices(String, String),
    #[error("no records to process")]
    Empty,
    #[error("parameter {0} has no present values")]
    NoPresentValues(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown pollutant {0:?}")]
    UnknownPollutant(String),
    #[error("breakpoint table line {line}: {message}")]
    Breakpoints { line: usize, message: String },
    #[error("non-finite sample {0}")]
    NonFinite(f64),
    #[error("mode {0} requires a PM2.5 predictor")]
    MissingPredictor(&'static str),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("parameter {0} is not reconstructed at the server")]
    NotReconstructed(&'static str),
    #[error("x values have zero variance")]
    DegenerateInput,
    #[error("arccos argument {0} outside [-1, 1]")]
    Domain(f64),
    #[error("unknown radio preset {0:?}")]
    UnknownPreset(String),
    #[error("target collision probability {0} is unreachable even with a single node")]
    CapacityUnreachable(f64),
    #[error("reduction fraction {0} must lie in [0, 1)")]
    Reduction(f64),
    #[error("unsupported payload of {0} bytes")]
    UnsupportedPayload(u32),
    #[error("model file: {0}")]
    ModelFormat(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
