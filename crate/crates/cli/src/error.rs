use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or input; exit code 2.
    #[error("{0}")]
    Validation(String),
    /// A model fit failed; exit code 3.
    #[error("{0}")]
    Fit(String),
    /// Writing outputs failed; exit code 1.
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Fit(_) => 3,
            CliError::Output(_) => 1,
        }
    }
}

impl From<tempest_core::data_ingest::IngestError> for CliError {
    fn from(e: tempest_core::data_ingest::IngestError) -> Self {
        CliError::Validation(e.to_string())
    }
}
