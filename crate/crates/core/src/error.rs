use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty vocabulary: nothing to sample")]
    EmptyVocabulary,

    #[error("subsampling requires a positive relative frequency, got {0}")]
    NonPositiveFrequency(f64),

    #[error("duplicate paragraph id `{0}`")]
    DuplicateParagraph(String),

    #[error("unknown category `{0}`")]
    UnknownCategory(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("context is empty")]
    EmptyContext,

    #[error("model has no Huffman tree; hierarchical softmax is unavailable")]
    MissingTree,

    #[error("uninferable paragraph: no in-vocabulary tokens")]
    Uninferable,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("cannot normalize a zero vector")]
    ZeroVector,

    #[error("labels contain a single class; AUC is undefined")]
    SingleClass,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("unknown finding `{0}`")]
    UnknownFinding(String),

    #[error("finding `{0}` has already been reviewed")]
    AlreadyReviewed(String),

    #[error("unknown document `{0}`")]
    UnknownDocument(String),

    #[error("no published model for category `{0}`")]
    NoModel(String),

    #[error("threshold must lie in [0, 1], got {0}")]
    BadThreshold(f64),

    #[error("document has no text")]
    EmptyDocument,

    #[error("training store has no records for category `{0}`")]
    EmptyStore(String),

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            what,
            reason: reason.into(),
        }
    }
}
