use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown experiment {0:?}")]
    UnknownExperiment(String),
    #[error("numerical failure: {0}")]
    Numeric(#[from] ldgf_core::Error),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for anything the user can fix in the configuration, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use ldgf_core::Error as E;
        match self {
            CliError::Config(_) | CliError::UnknownExperiment(_) => 2,
            CliError::Numeric(E::InvalidArgument(_) | E::Unsupported(_) | E::TooLarge(_)) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 1,
        }
    }
}
