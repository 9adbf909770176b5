use std::path::PathBuf;

use srlgnn_tensor::TensorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}:{line}: malformed JSON line: {message}", path.display())]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}:{line}: unknown label `{label}`", path.display())]
    UnknownLabel {
        path: PathBuf,
        line: usize,
        label: String,
    },
    #[error("{}:{line}: duplicate utterance id `{utt_id}` in conversation `{conv_id}`", path.display())]
    DuplicateUtterance {
        path: PathBuf,
        line: usize,
        conv_id: String,
        utt_id: String,
    },
    #[error("{}:{line}: lines of conversation `{conv_id}` are not contiguous", path.display())]
    NonContiguousConversation {
        path: PathBuf,
        line: usize,
        conv_id: String,
    },
    #[error("{}:{line}: utterance text is empty", path.display())]
    EmptyText { path: PathBuf, line: usize },
    #[error("label set: {0}")]
    LabelSet(String),
    #[error("no predictions to score")]
    EmptyPredictions,
    #[error("prediction references label `{0}` outside the label set")]
    PredictionLabel(String),
    #[error("malformed SRL annotations: {0}")]
    MalformedSrl(String),
    #[error("SRL frame for `{key}`: span [{start}, {end}) is out of range for {token_count} tokens")]
    SpanOutOfRange {
        key: String,
        start: usize,
        end: usize,
        token_count: usize,
    },
    #[error("SRL annotations reference unknown utterance `{0}`")]
    UnknownUtterance(String),
    #[error("input needs {needed} positions but at most {t_max} are allowed")]
    InputTooLong { needed: usize, t_max: usize },
    #[error("token id {id} outside vocabulary of size {size}")]
    TokenOutOfVocab { id: usize, size: usize },
    #[error("static embedding table has no row for token id {0}")]
    MissingEmbedding(usize),
    #[error("graph node span [{start}, {end}) does not fit the {len} target positions")]
    NodeOutsideTarget { start: usize, end: usize, len: usize },
    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    DimMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("configuration: {0}")]
    Config(String),
    #[error("checkpoint does not match configuration: field `{field}` is {checkpoint} in the checkpoint but {config} in the config")]
    ConfigMismatch {
        field: String,
        checkpoint: String,
        config: String,
    },
    #[error("utterance `{conv_id}/{utt_id}` has no gold label in the label set")]
    MissingGold { conv_id: String, utt_id: String },
    #[error("non-finite loss in epoch {epoch}, batch {batch}: {cause}")]
    NonFiniteLoss { epoch: usize, batch: usize, cause: String },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    /// Short stable identifier for machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MalformedLine { .. } => "malformed_line",
            Error::UnknownLabel { .. } => "unknown_label",
            Error::DuplicateUtterance { .. } => "duplicate_utterance",
            Error::NonContiguousConversation { .. } => "non_contiguous_conversation",
            Error::EmptyText { .. } => "empty_text",
            Error::LabelSet(_) => "label_set",
            Error::EmptyPredictions => "empty_predictions",
            Error::PredictionLabel(_) => "prediction_label",
            Error::MalformedSrl(_) => "malformed_srl",
            Error::SpanOutOfRange { .. } => "span_out_of_range",
            Error::UnknownUtterance(_) => "unknown_utterance",
            Error::InputTooLong { .. } => "input_too_long",
            Error::TokenOutOfVocab { .. } => "token_out_of_vocab",
            Error::MissingEmbedding(_) => "missing_embedding",
            Error::NodeOutsideTarget { .. } => "node_outside_target",
            Error::DimMismatch { .. } => "dim_mismatch",
            Error::Config(_) => "config",
            Error::ConfigMismatch { .. } => "config_mismatch",
            Error::MissingGold { .. } => "missing_gold",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::Tensor(_) => "tensor",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
