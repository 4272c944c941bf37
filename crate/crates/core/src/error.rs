use std::io;

use thiserror::Error;

/// Broad classification of a failure, used by front-ends to pick exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Transport,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid aspect: {0}")]
    InvalidAspect(String),

    #[error("invalid label: {0}")]
    InvalidLabel(String),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("no gloss for label `{0}`")]
    MissingGloss(String),

    #[error("invalid instance `{id}`: {reason}")]
    InvalidInstance { id: String, reason: String },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("instance `{instance}` has gold label `{label}` which is unseen in training")]
    UnseenGold { instance: String, label: String },

    #[error("probability {value} out of range [0, 1] ({context})")]
    ProbabilityOutOfRange { value: f64, context: String },

    #[error("no score for instance `{instance}` label `{label}`")]
    MissingScore { instance: String, label: String },

    #[error("duplicate score for instance `{instance}` label `{label}` mode `{mode}`")]
    DuplicateScore {
        instance: String,
        label: String,
        mode: String,
    },

    #[error("invalid policy config: {0}")]
    InvalidPolicy(String),

    #[error("label coverage: {0}")]
    Coverage(String),

    #[error("{0}")]
    Metric(String),

    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    #[error("quota shortfall: {0}")]
    QuotaShortfall(String),

    #[error("scorer: {0}")]
    Scorer(String),

    #[error("word vectors: {0}")]
    WordVectors(String),

    #[error("ESA index: {0}")]
    Esa(String),

    #[error("ensemble: {0}")]
    Ensemble(String),

    #[error("request timed out after {attempts} attempt(s): {detail}")]
    Timeout { attempts: usize, detail: String },

    #[error("transport failure after {attempts} attempt(s): {detail}")]
    Transport { attempts: usize, detail: String },

    #[error("scoring service returned HTTP {status}: {message}")]
    Service { status: u16, message: String },

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidAspect(_)
            | Error::InvalidPolicy(_)
            | Error::InvalidScheme(_)
            | Error::MissingGloss(_)
            | Error::Scorer(_) => ErrorKind::Config,
            Error::Timeout { .. }
            | Error::Transport { .. }
            | Error::Service { .. }
            | Error::Protocol(_) => ErrorKind::Transport,
            Error::Io(_) => ErrorKind::Io,
            _ => ErrorKind::Data,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
