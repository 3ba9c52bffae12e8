use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("illegal label sequence at position {position}: {reason}")]
    IllegalSequence { position: usize, reason: String },

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("label index {index} out of range for {size} labels")]
    LabelOutOfRange { index: usize, size: usize },

    #[error("sequence of {len} positions (with tag slot) exceeds maximum length {max}")]
    LengthExceeded { len: usize, max: usize },

    #[error("bad layer count {requested}: encoder has {available} layers")]
    BadLayerCount { requested: usize, available: usize },

    #[error("empty sequence")]
    EmptySequence,

    #[error("no legal label path exists")]
    NoLegalPath,

    #[error("empty lexicon word")]
    EmptyWord,

    #[error("negative lexicon weight {0}")]
    NegativeWeight(f64),

    #[error("segmentation covers {expected} characters but {found} feature rows were given")]
    SpanMismatch { expected: usize, found: usize },

    #[error("unknown POS label `{0}`")]
    UnknownPosLabel(String),

    #[error("invalid gold tree: {0}")]
    InvalidGoldTree(String),

    #[error("layer binding mismatch: {0}")]
    BindingMismatch(String),

    #[error("unknown corpus tag `{0}`")]
    UnknownTag(String),

    #[error("empty input")]
    EmptyInput,

    #[error("model not loaded")]
    ModelNotLoaded,

    #[error("{path}:{line}: {message}")]
    CorpusFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("model container format version {found}, expected {expected}")]
    FormatVersionMismatch { found: u32, expected: u32 },

    #[error("corrupt model container: {0}")]
    CorruptContainer(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn illegal(position: usize, reason: impl Into<String>) -> Self {
        Error::IllegalSequence {
            position,
            reason: reason.into(),
        }
    }
}
