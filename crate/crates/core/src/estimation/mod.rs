//! Likelihood, fitting and the fixed-point characterization of the MLE.

pub mod fit;
pub mod fixed_point;
pub mod likelihood;

pub use fit::{fit, fit_with, initial_params, DerivativeMode, FitOptions, FitResult, StdErrors};
pub use fixed_point::{fixed_point_check, fixed_point_rhs, truncation_delta, FixedPointResiduals};
pub use likelihood::{derivative_bundle, hessian, loglik, score, DerivativeBundle, LikelihoodContext};
