//! File formats, configuration, and the command implementations behind the
//! `caml` binary. Everything algorithmic lives in `caml-core`; this crate
//! only moves bytes and wires the pieces together.

pub mod commands;
pub mod config;
pub mod formats;

use std::fmt;

/// Process-level error taxonomy; the exit code is part of the contract:
/// 1 usage, 2 data, 3 numerical.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn data(msg: impl Into<String>) -> CliError {
        CliError::Data(msg.into())
    }

    pub fn usage(msg: impl Into<String>) -> CliError {
        CliError::Usage(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> CliError {
        CliError::Numeric(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<caml_core::corpus::CorpusError> for CliError {
    fn from(e: caml_core::corpus::CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<caml_core::metrics::MetricsError> for CliError {
    fn from(e: caml_core::metrics::MetricsError) -> Self {
        match e {
            caml_core::metrics::MetricsError::InvalidN { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<caml_core::training::TrainError> for CliError {
    fn from(e: caml_core::training::TrainError) -> Self {
        use caml_core::training::TrainError;
        match e {
            TrainError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            TrainError::NonFiniteLoss { .. } => CliError::Numeric(e.to_string()),
            TrainError::EmptySplit(_) | TrainError::Model(_) => CliError::Data(e.to_string()),
        }
    }
}

impl From<caml_core::explain::ExplainError> for CliError {
    fn from(e: caml_core::explain::ExplainError) -> Self {
        CliError::Data(e.to_string())
    }
}
