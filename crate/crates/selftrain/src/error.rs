//! Error type shared by every module in the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: malformed line: {reason}")]
    MalformedLine {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("unknown label {value:?}: not in the configured label list")]
    UnknownLabel { value: String },

    #[error("{at}: document has no tokens")]
    EmptyText { at: String },

    #[error("class {label} has {available} examples, need {needed}")]
    InsufficientClass {
        label: usize,
        available: usize,
        needed: usize,
    },

    #[error("duplicate example id {id:?}")]
    IdCollision { id: String },

    #[error("token id {id} out of range for vocabulary of size {vocab_size}")]
    VocabMismatch { id: u32, vocab_size: usize },

    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: u64 },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("unlabeled pool has no usable tokens")]
    EmptyPool,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("checkpoint version {found} unsupported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("vocabulary hash {found:#018x} does not match expected {expected:#018x}")]
    VocabHashMismatch { found: u64, expected: u64 },

    #[error("corrupt checkpoint: {0}")]
    CorruptFile(String),

    #[error("strategy {strategy} requires a non-empty pseudo-labeled dataset")]
    EmptyDPrime { strategy: String },

    #[error("invalid config at {field}: {reason}")]
    ConfigInvalid { field: String, reason: String },

    #[error("axis {axis:?} has fewer than two distinct values")]
    AxisDegenerate { axis: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
