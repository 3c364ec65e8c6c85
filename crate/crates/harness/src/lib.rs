//! Command-line harness for `flock-core`: run configuration, file formats,
//! run directories with manifests, and the `simulate`, `w1`, `verify` and
//! `check-assumptions` commands.
//!
//! Exit codes: 0 success, 1 a verdict failed, 2 input error (configuration,
//! file format, violated model assumptions), 3 runtime failure.

pub mod commands;
pub mod config;
pub mod io;
pub mod rundir;
pub mod seeds;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use commands::{check_assumptions, simulate, verify, w1_files, Suite, VerdictSummary, VerifyOutcome};
pub use config::RunConfig;

pub const EXIT_VERDICT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}{}: {message}", file.as_ref().map_or("config".into(), |p| p.display().to_string()), line.map_or(String::new(), |l| format!(":{l}")))]
    Config { file: Option<PathBuf>, line: Option<usize>, message: String },
    #[error("{path}:{line}: {message}")]
    Format { path: String, line: usize, message: String },
    #[error("cannot read {path}: {source}")]
    InputIo { path: PathBuf, source: std::io::Error },
    #[error("model assumptions violated: {0}")]
    Assumption(String),
    #[error("cannot write {path}: {source}")]
    OutputIo { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn config(line: Option<usize>, message: impl Into<String>) -> Self {
        Self::Config { file: None, line, message: message.into() }
    }

    pub fn input_io(path: &Path, source: std::io::Error) -> Self {
        Self::InputIo { path: path.to_path_buf(), source }
    }

    pub fn output_io(path: &Path, source: std::io::Error) -> Self {
        Self::OutputIo { path: path.to_path_buf(), source }
    }

    /// Attaches the config file name to a configuration error.
    pub fn in_file(self, path: &Path) -> Self {
        match self {
            Self::Config { line, message, .. } => Self::Config { file: Some(path.to_path_buf()), line, message },
            other => other,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } | Self::Format { .. } | Self::InputIo { .. } | Self::Assumption(_) => EXIT_INPUT,
            Self::OutputIo { .. } | Self::Runtime(_) => EXIT_RUNTIME,
        }
    }
}
