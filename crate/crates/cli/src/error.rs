use std::process::ExitCode;

use sbm_core::SbmError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0} point(s) did not converge")]
    NonConvergence(usize),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn from_core(e: SbmError) -> Self {
        match e {
            SbmError::Config(msg) => CliError::Config(msg),
            other => CliError::Other(other.into()),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::NonConvergence(_) => ExitCode::from(3),
            CliError::Other(_) => ExitCode::from(1),
        }
    }
}

impl From<SbmError> for CliError {
    fn from(e: SbmError) -> Self {
        CliError::from_core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.into())
    }
}
