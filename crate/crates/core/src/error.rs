use thiserror::Error;

pub type Result<T> = std::result::Result<T, GmeError>;

#[derive(Debug, Error)]
pub enum GmeError {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kernels live on different time grids")]
    GridMismatch,

    #[error("time {0} is not a grid point")]
    OffGrid(f64),

    /// A quasiparticle energy is too close to zero to pair eigenvectors reliably.
    #[error("quasiparticle energy {energy:e} is below the degeneracy tolerance {tolerance:e}")]
    DegenerateSpectrum { energy: f64, tolerance: f64 },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("Dyson series diverged at order {order} (non-finite kernel entries)")]
    Divergence { order: usize },

    #[error("physicality violated at t = {time}: covariance eigenvalue {eigenvalue} outside [-1, 1]")]
    Physicality { time: f64, eigenvalue: f64 },

    /// Structural invariants failed before projection; points at a kernel or coefficient bug.
    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("comparison window t_max = {t_max} exceeds half the bath recurrence time {horizon}")]
    RecurrenceHorizon { t_max: f64, horizon: f64 },

    #[error("bath quality gate failed: {0}")]
    BathQuality(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("malformed data: {0}")]
    Format(String),
}

impl From<ndarray_linalg::error::LinalgError> for GmeError {
    fn from(err: ndarray_linalg::error::LinalgError) -> Self {
        GmeError::Eigen(err.to_string())
    }
}
