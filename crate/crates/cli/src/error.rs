use thiserror::Error;

/// Failure of a subcommand, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl From<almab_core::Error> for CliError {
    fn from(err: almab_core::Error) -> Self {
        match err {
            almab_core::Error::Numerical(msg) => CliError::Numerical(msg),
            almab_core::Error::Input(msg) | almab_core::Error::Construction(msg) => CliError::Config(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
