//! Library side of the `fxsearcher` command: configuration resolution and
//! the optimize, apply and report commands.

pub mod config;
pub mod report;
pub mod run;

use thiserror::Error;

pub use config::{ConfigLayer, RunConfig, SearchOverrides, BUILTIN_BACKEND};
pub use report::{cmd_report, render_svg, ReportSummary};
pub use run::{build_backend, cmd_apply, cmd_optimize, RunRecord};

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;
pub const EXIT_ABORTED: i32 = 4;

/// A command failure, tagged with the stage that failed.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{stage}: {message}")]
    Config { stage: &'static str, message: String },
    #[error("{stage}: {message}")]
    Backend { stage: &'static str, message: String },
    #[error("optimize: {0}")]
    Aborted(String),
    #[error("{stage}: {message}")]
    Io { stage: &'static str, message: String },
}

impl CliError {
    pub fn config(stage: &'static str, message: impl Into<String>) -> Self {
        CliError::Config { stage, message: message.into() }
    }

    pub fn backend(stage: &'static str, message: impl Into<String>) -> Self {
        CliError::Backend { stage, message: message.into() }
    }

    pub fn io(stage: &'static str, message: impl Into<String>) -> Self {
        CliError::Io { stage, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => EXIT_CONFIG,
            CliError::Backend { .. } => EXIT_BACKEND,
            CliError::Aborted(_) => EXIT_ABORTED,
            CliError::Io { .. } => EXIT_OTHER,
        }
    }
}
