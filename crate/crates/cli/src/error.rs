use std::fmt;

use taxoprobe_eval::{ErrorKind, EvalError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Config,
    Endpoint,
    Data,
}

impl Kind {
    pub fn exit_code(self) -> u8 {
        match self {
            Kind::Config => 2,
            Kind::Endpoint => 3,
            Kind::Data => 4,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn config_error(msg: impl fmt::Display) -> CliError {
    CliError {
        kind: Kind::Config,
        error: anyhow::anyhow!("{msg}"),
    }
}

pub fn data_error(msg: impl fmt::Display) -> CliError {
    CliError {
        kind: Kind::Data,
        error: anyhow::anyhow!("{msg}"),
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        let kind = match e.kind() {
            ErrorKind::Config => Kind::Config,
            ErrorKind::Endpoint => Kind::Endpoint,
            ErrorKind::Data => Kind::Data,
        };
        CliError { kind, error: e.into() }
    }
}

/// Tags any error with the exit-code class it belongs to.
pub trait Classify<T> {
    fn config(self) -> CliResult<T>;
    fn data(self) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn config(self) -> CliResult<T> {
        self.map_err(|e| CliError {
            kind: Kind::Config,
            error: e.into(),
        })
    }

    fn data(self) -> CliResult<T> {
        self.map_err(|e| CliError {
            kind: Kind::Data,
            error: e.into(),
        })
    }
}
