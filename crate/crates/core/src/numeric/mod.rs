//! Numerical primitives shared by the distribution, estimation and
//! inference layers.

pub mod diff;
pub mod linalg;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod special;

pub use diff::{finite_diff_gradient, finite_diff_jacobian};
pub use quadrature::{gauss_legendre, integrate, integrate_with_error, QuadratureSpec};
pub use rng::RngStream;
pub use roots::{expand_bracket, find_root};
pub use special::{
    chi_squared_sf, gamma, ln_beta, ln_gamma, lower_incomplete_gamma, reg_incomplete_beta,
    reg_incomplete_gamma_lower, reg_incomplete_gamma_upper, std_normal_cdf, std_normal_pdf,
    std_normal_quantile, std_normal_sf,
};
