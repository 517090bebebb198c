use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid truncation dimension {dim} (need at least {min})")]
    InvalidDimension { dim: usize, min: usize },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("operator is not Hermitian (max |A - A^dagger| = {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("shape mismatch: expected dimension {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("Fock truncation too small: dropped tail weight {tail_weight:.3e} exceeds {threshold:.1e} at dim {dim}")]
    Truncation {
        dim: usize,
        tail_weight: f64,
        threshold: f64,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("unsupported: {0}")]
    Unsupported(&'static str),

    #[error("step size underflow at t = {t:.6} (h = {step:.3e}); last valid time {t}")]
    StiffFailure { t: f64, step: f64 },

    #[error("invariant breach at t = {t:.6}: {what} = {value:.3e}")]
    InvariantBreach { t: f64, what: &'static str, value: f64 },

    #[error("steady state not reached: best residual {best_residual:.3e} after t = {time:.1} (tolerance {tolerance:.1e})")]
    NonConvergence {
        best_residual: f64,
        tolerance: f64,
        time: f64,
        best_state: Box<ndarray::Array2<num_complex::Complex64>>,
    },

    #[error("spectral gap not converged under grid refinement: {history:?}")]
    RefinementFailure { history: Vec<(usize, f64)> },

    #[error("energy certificate failed: {0}")]
    CertificationFailure(String),

    #[error("contrast underflow: contrast {contrast:.3e} at t = {t:.3} before the fit window opens")]
    UnderflowHorizon { t: f64, contrast: f64 },

    #[error("decay fit failed: {0}")]
    FitFailure(String),

    #[error("sweep failed: only {valid} of {total} cells produced a valid decay fit (need {required})")]
    SweepFailure {
        valid: usize,
        total: usize,
        required: usize,
    },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(err: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(err.to_string())
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be a finite positive number",
        })
    }
}
