use thiserror::Error;

/// Errors raised by the reduction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("linear solve failed at step {step}: {reason}")]
    StepFailure { step: usize, reason: String },

    #[error("iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("requested {requested} modes but only {available} are available")]
    RankTooSmall { requested: usize, available: usize },

    #[error("empty spectrum")]
    EmptySpectrum,

    #[error("non-positive value {value:e} in {context}")]
    NonPositive { context: &'static str, value: f64 },

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("unknown invariant `{0}`")]
    UnknownInvariant(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("malformed snapshot file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
