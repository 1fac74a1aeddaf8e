use std::process::ExitCode;

/// Failures grouped by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::MissingInput(_) => 4,
            CliError::Io(_) => 1,
        })
    }
}

impl From<hrom::Error> for CliError {
    fn from(e: hrom::Error) -> Self {
        use hrom::Error as E;
        match e {
            E::Config(msg) => CliError::Config(msg),
            E::InvalidGrid(_)
            | E::LayoutMismatch(_)
            | E::UnknownInvariant(_)
            | E::RankTooSmall { .. }
            | E::DimensionMismatch { .. } => CliError::Config(e.to_string()),
            E::Format(_) => CliError::MissingInput(e.to_string()),
            E::Io(io) => CliError::Io(io),
            E::StepFailure { .. }
            | E::NoConvergence { .. }
            | E::EmptySpectrum
            | E::NonPositive { .. }
            | E::Decomposition(_) => CliError::Numerical(e.to_string()),
        }
    }
}
