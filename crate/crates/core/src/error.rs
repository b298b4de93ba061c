use thiserror::Error;

use crate::eigensolver::SpectrumResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent sizes between matrices, vectors or bases.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A model hypothesis (connectivity, interaction sign, ...) does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} has {size} entries, above the cap of {cap}")]
    CapExceeded { what: &'static str, size: u128, cap: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("Lanczos did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64, best: Box<SpectrumResult> },

    #[error("adaptive quadrature did not converge: {0}")]
    Quadrature(String),

    /// A trial-walker overlap went negative. Cone positivity forbids this,
    /// so it always signals a bug or an out-of-hypothesis input.
    #[error("negative trial-walker overlap {overlap:.3e} at step {step} (walker {walker})")]
    SignViolation { step: usize, walker: usize, overlap: f64 },

    #[error("degenerate ensemble: {0}")]
    DegenerateEnsemble(String),

    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Precondition(_) => "precondition",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::CapExceeded { .. } => "cap_exceeded",
            Error::NonFinite(_) => "non_finite",
            Error::NoConvergence { .. } => "no_convergence",
            Error::Quadrature(_) => "quadrature",
            Error::SignViolation { .. } => "sign_violation",
            Error::DegenerateEnsemble(_) => "degenerate_ensemble",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
