use gme_core::GmeError;
use thiserror::Error;

/// Process exit codes.
pub const EXIT_OTHER: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_DIVERGENCE: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;
/// `compare` ran but the trajectories differ by more than the tolerance.
pub const EXIT_TOLERANCE: u8 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),

    /// The Dyson series blew up or did not reach the tolerance.
    #[error("{0}")]
    Divergence(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("trajectories cannot be compared: {0}")]
    Mismatch(String),

    #[error("{0}")]
    Other(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Mismatch(_) => EXIT_VALIDATION,
            CliError::Divergence(_) => EXIT_DIVERGENCE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Other(_) | CliError::Io(_) => EXIT_OTHER,
        }
    }

    /// Prefixes the message with where the failure happened.
    pub fn context(self, what: &str) -> Self {
        match self {
            CliError::Validation(m) => CliError::Validation(format!("{what}: {m}")),
            CliError::Divergence(m) => CliError::Divergence(format!("{what}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{what}: {m}")),
            CliError::Mismatch(m) => CliError::Mismatch(format!("{what}: {m}")),
            CliError::Other(m) => CliError::Other(format!("{what}: {m}")),
            CliError::Io(e) => CliError::Other(format!("{what}: {e}")),
        }
    }
}

impl From<GmeError> for CliError {
    fn from(err: GmeError) -> Self {
        let msg = err.to_string();
        match err {
            GmeError::InvalidModel(_)
            | GmeError::InvalidState(_)
            | GmeError::InvalidParameter(_)
            | GmeError::DegenerateSpectrum { .. }
            | GmeError::RecurrenceHorizon { .. }
            | GmeError::BathQuality(_) => CliError::Validation(msg),
            GmeError::Divergence { .. } => CliError::Divergence(msg),
            GmeError::Physicality { .. } | GmeError::Consistency(_) | GmeError::Eigen(_) => {
                CliError::Numerical(msg)
            }
            GmeError::GridMismatch | GmeError::OffGrid(_) => CliError::Mismatch(msg),
            GmeError::Io(e) => CliError::Io(e),
            GmeError::Csv(_) | GmeError::Format(_) => CliError::Other(msg),
        }
    }
}
