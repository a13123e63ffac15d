//! Library side of the `dfscreen` command-line tool: CSV ingestion, the
//! subcommands and their reports.

pub mod commands;
pub mod data;
pub mod predict;

use std::fmt;

use dfscreen::ScreenError;

/// Process exit status for input and parse failures.
pub const EXIT_INPUT: i32 = 2;
/// Exit status for contract violations (bad link, response or parameters).
pub const EXIT_CONTRACT: i32 = 3;
/// Exit status when a simulation replication fails.
pub const EXIT_REPLICATION: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable, unwritable or malformed files.
    Input(String),
    Screen(ScreenError),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Screen(ScreenError::Replication { .. }) => EXIT_REPLICATION,
            CliError::Screen(_) => EXIT_CONTRACT,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => f.write_str(msg),
            CliError::Screen(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CliError::Input(_) => None,
            CliError::Screen(e) => Some(e),
        }
    }
}

impl From<ScreenError> for CliError {
    fn from(e: ScreenError) -> Self {
        CliError::Screen(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Writes `contents` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&std::path::Path>, contents: &str) -> CliResult<()> {
    match path {
        Some(p) => {
            std::fs::write(p, contents).map_err(|e| CliError::input(format!("cannot write {}: {e}", p.display())))
        }
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}
