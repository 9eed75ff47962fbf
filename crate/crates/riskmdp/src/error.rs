use std::path::PathBuf;

use thiserror::Error;

/// Failures surfaced by the command-line front end, each tied to a stable
/// process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// The file was read but its contents are not a valid document.
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] riskmdp_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Format { path: path.into(), message: message.into() }
    }

    /// 1 for I/O, 4 for an exceeded enumeration cap, 2 for everything else
    /// (malformed files, invalid models, policies or flags).
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => exit::IO,
            CliError::Core(riskmdp_core::Error::CapExceeded { .. }) => exit::CAP_EXCEEDED,
            _ => exit::VALIDATION,
        }
    }
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const CERTIFY_FAIL: i32 = 3;
    pub const CAP_EXCEEDED: i32 = 4;
}

pub type Result<T> = std::result::Result<T, CliError>;
