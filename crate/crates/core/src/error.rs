use thiserror::Error;

/// Errors produced anywhere in the restoration toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("pnm parse error at byte {offset}: {message}")]
    Pnm { offset: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("shape mismatch in layer {layer}: expected {expected}, got {actual}")]
    ShapeMismatch {
        layer: String,
        expected: String,
        actual: String,
    },

    #[error("gmm: {0}")]
    Gmm(String),

    #[error("cannot separate text from background: {0}")]
    Roles(String),

    #[error("no valley found between histogram modes")]
    NoValley,

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("weight file error at byte {offset}: {message}")]
    WeightFile { offset: usize, message: String },

    #[error("weight file was written for a different network (file spec hash {found:#018x}, expected {expected:#018x})")]
    SpecHashMismatch { expected: u64, found: u64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
