use bcs_core::BcsError;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Ingestion(String),
    #[error("{0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<BcsError> for CliError {
    fn from(e: BcsError) -> Self {
        match e {
            BcsError::InvalidParameter(m) => CliError::Usage(m),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Ingestion(_) | CliError::Io(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Ingestion(_) | CliError::Io(_) => "ingestion",
            CliError::Numeric(_) => "numeric",
        }
    }

    pub fn to_json(&self) -> String {
        json!({
            "schema_version": crate::output::SCHEMA_VERSION,
            "error": { "kind": self.kind(), "message": self.to_string() },
        })
        .to_string()
    }
}
