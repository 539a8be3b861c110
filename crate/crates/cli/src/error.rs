use thiserror::Error;

/// Harness failures, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical blow-up: {0}")]
    BlowUp(String),
    #[error(transparent)]
    Core(#[from] tase_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 for configuration and input errors, 2 for numerical blow-up.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::BlowUp(_) | CliError::Core(tase_core::Error::NonFiniteState { .. }) => 2,
            _ => 1,
        }
    }
}
