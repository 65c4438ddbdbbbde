use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("sequence of {len} tokens exceeds the maximum length of {max}")]
    Length { len: usize, max: usize },

    #[error("token id {id} is outside the vocabulary of size {size}")]
    Vocab { id: usize, size: usize },

    #[error("unknown parameter `{0}`")]
    MissingParam(String),

    #[error("loss must be a scalar, got a {rows}x{cols} node")]
    NonScalarLoss { rows: usize, cols: usize },

    #[error("non-finite value produced by {0}")]
    NonFinite(String),

    #[error("invalid document `{doc_id}`: {reason}")]
    InvalidDocument { doc_id: String, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("length mismatch: {predictions} probabilities but {labels} labels")]
    LabelLength { predictions: usize, labels: usize },
}

impl Error {
    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn doc(doc_id: &str, reason: impl Into<String>) -> Self {
        Error::InvalidDocument {
            doc_id: doc_id.into(),
            reason: reason.into(),
        }
    }
}
