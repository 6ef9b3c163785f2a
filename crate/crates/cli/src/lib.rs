//! Configuration handling and command execution behind the `wgm-isolator`
//! binary.

// `!(x > y)` rejects NaN along with the failing comparison
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod run;

use std::path::Path;

use serde::Serialize;
use thiserror::Error;

pub use config::{parse_config, Command, RunConfig, Task};
pub use run::{run, RunSummary};

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid or unreadable configuration; exit status 2.
    #[error("{0}")]
    Config(String),
    /// The computation itself failed; exit status 1.
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Compute(_) => "computation",
        }
    }

    pub fn compute(e: impl std::fmt::Display) -> Self {
        CliError::Compute(e.to_string())
    }
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    kind: &'a str,
    command: Option<&'a str>,
    message: String,
    exit_code: u8,
}

/// One-line JSON error record: `{"error": {kind, command, message, exit_code}}`.
pub fn error_json(err: &CliError, command: Option<Command>) -> String {
    let record = ErrorRecord {
        kind: err.kind(),
        command: command.map(Command::name),
        message: err.to_string(),
        exit_code: err.exit_code(),
    };
    serde_json::json!({ "error": record }).to_string()
}

/// Writes `error.json` into `out` if the directory exists or can be made.
pub fn write_error_record(out: &Path, err: &CliError, command: Option<Command>) {
    if std::fs::create_dir_all(out).is_ok() {
        let _ = std::fs::write(out.join("error.json"), error_json(err, command) + "\n");
    }
}
