use thiserror::Error;

/// Errors raised by the numerical routines and the distribution layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BcsError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge (estimate {estimate:e}, error estimate {error:e})")]
    QuadratureNonConvergence { estimate: f64, error: f64 },

    #[error("root is not bracketed: f({lo}) and f({hi}) share a sign")]
    NotBracketed { lo: f64, hi: f64 },

    #[error("weight function is singular at z = 0 for {0}")]
    Singularity(String),

    #[error("lambda = {0:e} lies inside the unstable seam around zero")]
    Seam(f64),

    #[error("observed information matrix is singular")]
    SingularInformation,

    #[error("fit failed for the {model} model: {reason}")]
    FitFailed { model: String, reason: String },

    #[error("fitted cdf reaches the boundary of (0, 1) at observation {index}")]
    Boundary { index: usize },

    #[error("survival function underflows over the probe range")]
    SurvivalUnderflow,

    #[error("function evaluation failed: {0}")]
    Evaluation(String),
}

pub type Result<T> = std::result::Result<T, BcsError>;
