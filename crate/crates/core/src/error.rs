use std::io;
use std::path::PathBuf;

/// Errors produced anywhere in the segmentation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid shape {0:?}: every dimension must be at least 1")]
    InvalidShape(Vec<usize>),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("degenerate batch: channel statistics need at least two values, got {0}")]
    DegenerateBatch(usize),

    #[error("invalid label {value} at index {index}: labels must be 0 or 1")]
    InvalidLabel { index: usize, value: i64 },

    #[error("invalid mask value {value} at index {index}")]
    InvalidMask { index: usize, value: u8 },

    #[error("training diverged: non-finite loss or gradient at step {step}")]
    TrainingDiverged { step: u64 },

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("incompatible model: {0}")]
    IncompatibleModel(String),

    #[error("netpbm codec error at byte {offset}: {reason}")]
    Codec { offset: usize, reason: String },

    #[error("corrupt record file: {0}")]
    CorruptRecord(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    pub(crate) fn geometry(msg: impl Into<String>) -> Self {
        Error::InvalidGeometry(msg.into())
    }
}
