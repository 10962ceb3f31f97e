//! Yes/No scoring of QA datasets against chat-completion endpoints that
//! expose per-token log-probabilities, plus a deterministic mock endpoint.

pub mod config;
pub mod error;
pub mod mock;
pub mod prompt;
pub mod run;
pub mod score;
pub mod wire;

mod client;

pub use client::Endpoint;
pub use config::{Decision, EndpointConfig, Mode};
pub use error::{ErrorKind, EvalError};
pub use prompt::{build_prompt, Prompt, Slot};
pub use run::{run_eval, EvalRun, RunOptions, ScoreRecord};
pub use score::{aggregate_yes_no, YesNoScore};

pub type Result<T, E = EvalError> = std::result::Result<T, E>;
