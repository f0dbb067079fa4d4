use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("computation failed: {0}")]
    Numerical(fmin_core::Error),
    #[error("cannot write report: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<fmin_core::Error> for CliError {
    fn from(e: fmin_core::Error) -> Self {
        use fmin_core::Error as E;
        match e {
            E::Argument(_)
            | E::Precondition(_)
            | E::Unsupported(_)
            | E::UnsupportedDimension { .. }
            | E::WrongAmbient(_)
            | E::ContractViolation(_)
            | E::Parse { .. }
            | E::Io(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e),
        }
    }
}
