use hdnids_core::HdcError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

impl From<HdcError> for CliError {
    fn from(e: HdcError) -> Self {
        let msg = e.to_string();
        match innermost(&e) {
            HdcError::InvalidParameter(_) | HdcError::UnsupportedBitwidth(_) => CliError::Config(msg),
            HdcError::Invariant(_) => CliError::Invariant(msg),
            _ => CliError::Data(msg),
        }
    }
}

fn innermost(e: &HdcError) -> &HdcError {
    match e {
        HdcError::AtSample { source, .. } => innermost(source),
        other => other,
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}
