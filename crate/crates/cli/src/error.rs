use std::path::Path;

use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] gflow_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("stored data: {0}")]
    Data(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    }

    /// 2 for configuration problems, 3 for solver failures, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        use gflow_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e.root() {
                E::InvalidParameter { .. } | E::InvalidGrid(_) | E::InvalidDensity(_) | E::ZeroMass => 2,
                _ => 3,
            },
            CliError::Io(_) | CliError::Csv(_) | CliError::Data(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
