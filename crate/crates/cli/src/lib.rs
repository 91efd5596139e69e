//! Command-line front end: configuration, file formats and the
//! `simulate`, `sweep`, `fit`, `design` and `points` commands.

pub mod commands;
pub mod config;
pub mod numfmt;
pub mod table;
pub mod touchstone;

use std::path::PathBuf;

use cosine_switch::SwitchError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: missing key {0}")]
    MissingKey(String),

    #[error("config: unknown key {0}")]
    UnknownKey(String),

    #[error("config: {key}: {reason}")]
    Config { key: String, reason: String },

    #[error("config: {0}")]
    ConfigSyntax(String),

    #[error("{what}: missing column {column}")]
    MissingColumn { what: String, column: String },

    #[error("{what}: line {line}: {reason}")]
    Format { what: String, line: usize, reason: String },

    #[error("data: {0}")]
    Data(String),

    #[error(transparent)]
    Model(#[from] SwitchError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for bad input (config, data files), 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(_) | CliError::Io { .. } => 1,
            _ => 2,
        }
    }
}
