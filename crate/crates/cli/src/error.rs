use std::process::ExitCode;

/// Failure classes with their exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Exit code 1.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Exit code 2.
    #[error("input error: {0}")]
    Input(String),
}

impl CliError {
    pub fn input(e: combres::Error) -> Self {
        Self::Input(e.to_string())
    }

    pub fn numerical(e: combres::Error) -> Self {
        Self::Numerical(e.to_string())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Numerical(_) => ExitCode::from(1),
            Self::Input(_) => ExitCode::from(2),
        }
    }
}
