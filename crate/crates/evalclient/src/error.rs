use std::path::PathBuf;

use taxoprobe_core::metrics::MetricsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid endpoint configuration: {0}")]
    Config(String),
    #[error("instance `{instance_id}` has no image reference (required in vqa mode)")]
    MissingImage { instance_id: String },
    #[error("cannot read image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("request failed after {attempts} attempt(s): {message}")]
    Transport { attempts: usize, message: String },
    #[error("endpoint answered HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed endpoint response: {0}")]
    Protocol(String),
    #[error("endpoint returned no log-probabilities for the first generated token")]
    NoLogprobs,
    #[error("neither a Yes nor a No variant among the top tokens {tokens:?}")]
    Abstention { tokens: Vec<String> },
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
    #[error("invalid dataset: {0}")]
    Dataset(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Endpoint,
    Data,
}

impl EvalError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            EvalError::Config(_) => ErrorKind::Config,
            EvalError::Transport { .. }
            | EvalError::Http { .. }
            | EvalError::Protocol(_)
            | EvalError::NoLogprobs
            | EvalError::Abstention { .. } => ErrorKind::Endpoint,
            EvalError::MissingImage { .. }
            | EvalError::Image { .. }
            | EvalError::Checkpoint { .. }
            | EvalError::Dataset(_)
            | EvalError::Metrics(_)
            | EvalError::Io(_) => ErrorKind::Data,
        }
    }
}
