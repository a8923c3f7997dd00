use std::io;
use std::path::Path;
use std::process::ExitCode;

use thiserror::Error;

/// Failures surfaced by the command line, each with its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("acceptance gate failed: {0}")]
    Gate(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Format(_) => 4,
            CliError::Gate(_) => 5,
            CliError::Internal(_) => 1,
        })
    }

    pub fn io(path: &Path, err: io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl From<hddpg_core::Error> for CliError {
    fn from(e: hddpg_core::Error) -> Self {
        use hddpg_core::Error as E;
        match e {
            E::Io(err) => CliError::Io(err.to_string()),
            E::Format(m) => CliError::Format(m),
            E::Invariant(m) => CliError::Internal(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

/// Attaches `path` to core errors that carry I/O or format failures.
pub trait WithPath<T> {
    fn at(self, path: &Path) -> CliResult<T>;
}

impl<T> WithPath<T> for hddpg_core::Result<T> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| match e {
            hddpg_core::Error::Io(err) => CliError::io(path, err),
            hddpg_core::Error::Format(m) => CliError::Format(format!("{}: {m}", path.display())),
            other => other.into(),
        })
    }
}

impl<T> WithPath<T> for io::Result<T> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| CliError::io(path, e))
    }
}
