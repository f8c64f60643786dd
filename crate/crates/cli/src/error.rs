use lmsm_haar::Error as CoreError;
use thiserror::Error;

/// Failure of a CLI run, grouped by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config file or parameters. Exit 2.
    #[error("{0}")]
    Config(String),
    /// The computation itself failed. Exit 3.
    #[error("{0}")]
    Compute(String),
    /// Reading or writing files failed. Exit 4.
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "invalid-config",
            CliError::Compute(_) => "compute-failure",
            CliError::Io(_) => "io-failure",
        }
    }

    /// One-line JSON record for stderr.
    pub fn machine_line(&self) -> String {
        serde_json::json!({
            "status": "error",
            "exit_code": self.exit_code(),
            "kind": self.kind(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        let msg = err.to_string();
        match err {
            CoreError::Parameter(_)
            | CoreError::Constraints(_)
            | CoreError::Depth { .. }
            | CoreError::Budget { .. }
            | CoreError::Domain(_)
            | CoreError::Format(_) => CliError::Config(msg),
            CoreError::Resolution(_) | CoreError::Statistics(_) | CoreError::Quadrature(_) => CliError::Compute(msg),
            CoreError::Io(_) => CliError::Io(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
