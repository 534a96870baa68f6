//! Orchestration for the `inclusion-lab` binary: configuration loading,
//! one function per command, and deterministic run directories.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;

use std::fmt;
use std::path::{Path, PathBuf};

pub use commands::{run, Command, RunOptions, RunSummary};
pub use config::RunConfig;
pub use plot::{emit_plotdata, PlotKind};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "INCLUSION_LAB_OUT";

#[derive(Debug)]
pub enum CliError {
    /// Malformed or unreadable configuration.
    Config(String),
    Core(inclusion_core::Error),
    /// One or more verification checks failed.
    Checks(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(inclusion_core::Error::Io(_)) => 1,
            CliError::Core(_) => 2,
            CliError::Checks(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Checks(names) => write!(f, "failed checks: {}", names.join(", ")),
        }
    }
}

impl std::error::Error for CliError {}

impl From<inclusion_core::Error> for CliError {
    fn from(e: inclusion_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

/// `<root>/<config stem>/<command>`, with the root from [`OUT_ENV`] or `out`.
pub fn default_out_dir(config: &Path, command: Command) -> PathBuf {
    let root = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"));
    let stem = config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    root.join(stem).join(command.name())
}
