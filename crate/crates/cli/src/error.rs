use thiserror::Error;

use polyfreq::models::SpecError;

/// Failures surfaced by the command-line front end, each mapped to an exit
/// status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("data: {0}")]
    Data(String),

    #[error("model: {0}")]
    Model(String),
}

impl CliError {
    /// 1 usage, 2 data, 3 model validity.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Model(_) => 3,
        }
    }
}

impl From<polyfreq::Error> for CliError {
    fn from(e: polyfreq::Error) -> Self {
        use polyfreq::Error as E;
        match e {
            E::NonStationary(_) | E::Unsupported(_) | E::NoConvergence { .. } => CliError::Model(e.to_string()),
            E::EmptySample | E::NonFinite { .. } | E::Degenerate(_) => CliError::Data(e.to_string()),
            E::InvalidArgument(_) | E::Grid(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        match e {
            SpecError::Parse(msg) => CliError::Data(format!("model spec: {msg}")),
            SpecError::Model(inner) => CliError::Model(inner.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
