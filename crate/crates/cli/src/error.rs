use smi_core::SmiError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, unparsable or inconsistent configuration.
    #[error("{0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] SmiError),
    /// An emitted row broke `lower ≤ asymptotic ≤ upper`.
    #[error("ordering check failed: {0}")]
    Ordering(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) | CliError::Ordering(_) => 2,
        }
    }
}
