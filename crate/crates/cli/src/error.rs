use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }

    pub(crate) fn context(self, prefix: &str) -> Self {
        match self {
            CliError::Config(m) => CliError::Config(format!("{prefix}: {m}")),
            other => other,
        }
    }
}

impl From<nlspec_core::Error> for CliError {
    fn from(e: nlspec_core::Error) -> Self {
        use nlspec_core::Error as E;
        match e {
            E::OffsetPotential { .. } | E::InvalidInput(_) | E::DimMismatch { .. } | E::SymmetryViolation { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}
