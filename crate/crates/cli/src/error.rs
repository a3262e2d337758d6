use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] dblab::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VERIFICATION: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NUMERICAL: i32 = 3;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => core_exit_code(e),
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) | CliError::Config(_) => exit::CONFIG,
        }
    }
}

pub fn core_exit_code(e: &dblab::Error) -> i32 {
    if e.is_numerical() {
        exit::NUMERICAL
    } else {
        exit::CONFIG
    }
}
