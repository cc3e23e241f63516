use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the pipeline building blocks.
#[derive(Debug, Error)]
pub enum CoinError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown class {0}")]
    UnknownClass(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty class: {0}")]
    EmptyClass(&'static str),

    #[error("discriminator has not been trained")]
    UntrainedDiscriminator,

    #[error("cosine distance undefined for a zero vector")]
    ZeroVector,

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("degenerate radius: every pair of class samples is parallel")]
    DegenerateRho,

    #[error("anchor {anchor} has an empty {pool} neighbor pool")]
    EmptyPool { anchor: usize, pool: &'static str },

    #[error("index {index} out of range for {len} nodes")]
    OutOfRange { index: usize, len: usize },

    #[error("node {0} is not a graph anchor")]
    NonAnchor(usize),

    #[error("index mismatch: {0}")]
    IndexMismatch(String),

    #[error("empty batch")]
    EmptyBatch,

    #[error("empty input")]
    EmptyInput,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("both classes must be present")]
    SingleClassInput,

    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },

    #[error("malformed file {path}, line {line}: {message}")]
    MalformedFile { path: PathBuf, line: u64, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, CoinError>;

impl CoinError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CoinError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        CoinError::MalformedFile {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// True when training produced non-finite values.
    pub fn is_divergence(&self) -> bool {
        matches!(self, CoinError::Divergence { .. })
    }
}
