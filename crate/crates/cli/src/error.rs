use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad parameter values or combinations.
    #[error("{0}")]
    Usage(String),
    /// The input file could not be read or failed validation.
    #[error("{0}")]
    Input(String),
    /// An analysis step or writing its results failed.
    #[error("{0}")]
    Analysis(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Analysis(_) => 4,
        })
    }
}

pub fn analysis(step: &str) -> impl Fn(metaudit_core::Error) -> CliError + '_ {
    move |e| CliError::Analysis(format!("{step}: {e}"))
}
