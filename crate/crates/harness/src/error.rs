use thiserror::Error;

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),

    #[error(transparent)]
    Core(po2nc_core::Error),
}

impl From<po2nc_core::Error> for HarnessError {
    fn from(e: po2nc_core::Error) -> Self {
        match e {
            po2nc_core::Error::Io(msg) => HarnessError::Io(msg),
            other => HarnessError::Core(other),
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl HarnessError {
    /// Process exit code: 2 for an infeasible plan, 3 for IO, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core(po2nc_core::Error::Infeasible { .. }) => 2,
            HarnessError::Io(_) => 3,
            _ => 1,
        }
    }
}
