use std::path::PathBuf;

use coin_core::CoinError;

/// Failure of a command, grouped by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("missing input {}", .0.display())]
    MissingInput(PathBuf),
    #[error(transparent)]
    Data(CoinError),
    #[error(transparent)]
    Divergence(CoinError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::MissingInput(_) | CliError::Data(_) => 2,
            CliError::Divergence(_) => 3,
        }
    }
}

impl From<CoinError> for CliError {
    fn from(e: CoinError) -> Self {
        if e.is_divergence() {
            CliError::Divergence(e)
        } else {
            CliError::Data(e)
        }
    }
}
