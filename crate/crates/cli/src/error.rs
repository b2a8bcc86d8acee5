use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] depthpair::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 1 for bad parameters, 2 for bad data on disk, 64 for bad invocation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_data_integrity() => 2,
            CliError::Core(_) | CliError::Config(_) => 1,
            CliError::Usage(_) => 64,
        }
    }
}
