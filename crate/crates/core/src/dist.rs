//! The Box-Cox symmetric distribution `BCS(μ, σ, λ; r)`.

use crate::error::{BcsError, Result};
use crate::numeric::{integrate, QuadratureSpec, RngStream};
use crate::symmetric::{
    log_symmetric_pdf, symmetric_cdf, symmetric_quantile, symmetric_quantile_split, symmetric_sf,
    DensityFamily,
};
use crate::tail::tail_index;
use serde::{Deserialize, Serialize};

/// Below this magnitude λ is treated as exactly zero.
pub const LAMBDA_SEAM: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcsParams {
    pub mu: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub family: DensityFamily,
}

/// Support of the transformed variable `Z` and the mass `R(1/(σ|λ|))` kept by truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationInfo {
    pub support_lower: f64,
    pub support_upper: f64,
    pub normalizer: f64,
    /// `R(−1/(σ|λ|))`, the discarded mass; zero when λ = 0.
    pub cut_mass: f64,
}

impl TruncationInfo {
    pub fn log_normalizer(&self) -> f64 {
        (-self.cut_mass).ln_1p()
    }
}

/// Existence-aware moment value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub value: f64,
    pub exists: bool,
}

/// Centile-based coefficient of variation with its closed-form approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentileCv {
    pub exact: f64,
    pub approximation: f64,
}

impl BcsParams {
    pub fn new(mu: f64, sigma: f64, lambda: f64, family: DensityFamily) -> Result<Self> {
        let p = Self {
            mu,
            sigma,
            lambda,
            family,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(BcsError::InvalidParameter(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(BcsError::InvalidParameter(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !self.lambda.is_finite() {
            return Err(BcsError::InvalidParameter(format!(
                "lambda must be finite, got {}",
                self.lambda
            )));
        }
        self.family.validate()
    }

    /// True when λ falls inside the seam and the log-symmetric branch applies.
    pub fn is_log_symmetric(&self) -> bool {
        self.lambda.abs() < LAMBDA_SEAM
    }

    /// λ with seam values snapped to zero.
    pub fn effective_lambda(&self) -> f64 {
        if self.is_log_symmetric() {
            0.0
        } else {
            self.lambda
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..*self }
    }

    pub fn truncation(&self) -> Result<TruncationInfo> {
        self.validate()?;
        let lambda = self.effective_lambda();
        if lambda == 0.0 {
            return Ok(TruncationInfo {
                support_lower: f64::NEG_INFINITY,
                support_upper: f64::INFINITY,
                normalizer: 1.0,
                cut_mass: 0.0,
            });
        }
        let c = 1.0 / (self.sigma * lambda.abs());
        let cut_mass = symmetric_sf(&self.family, c)?;
        let (lo, hi) = if lambda > 0.0 {
            (-c, f64::INFINITY)
        } else {
            (f64::NEG_INFINITY, c)
        };
        Ok(TruncationInfo {
            support_lower: lo,
            support_upper: hi,
            normalizer: 1.0 - cut_mass,
            cut_mass,
        })
    }
}

/// Box-Cox transform `z = ((y/μ)^λ − 1)/(σλ)`, or `log(y/μ)/σ` at λ = 0.
pub fn transform(y: f64, p: &BcsParams) -> Result<f64> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(BcsError::Domain(format!("observation must be positive and finite, got {y}")));
    }
    transform_from_log(y.ln(), p)
}

/// [`transform`] evaluated from `log y`.
pub fn transform_from_log(ln_y: f64, p: &BcsParams) -> Result<f64> {
    p.validate()?;
    if !ln_y.is_finite() {
        return Err(BcsError::Domain(format!("log observation must be finite, got {ln_y}")));
    }
    let ly = ln_y - p.mu.ln();
    let lambda = p.effective_lambda();
    if lambda == 0.0 {
        Ok(ly / p.sigma)
    } else {
        Ok((lambda * ly).exp_m1() / (p.sigma * lambda))
    }
}

/// Inverse transform `y = μ(1 + σλz)^{1/λ}`, or `μ exp(σz)` at λ = 0.
pub fn inverse_transform(z: f64, p: &BcsParams) -> Result<f64> {
    p.validate()?;
    let lambda = p.effective_lambda();
    if lambda == 0.0 {
        return Ok(p.mu * (p.sigma * z).exp());
    }
    let base = p.sigma * lambda * z;
    if !(base > -1.0) {
        return Err(BcsError::Domain(format!("z = {z} lies outside the support")));
    }
    Ok(p.mu * (base.ln_1p() / lambda).exp())
}

fn log_pdf_with(ln_y: f64, p: &BcsParams, trunc: &TruncationInfo) -> Result<f64> {
    if ln_y.is_nan() || ln_y.is_infinite() {
        return Err(BcsError::Domain(format!("log observation must be finite, got {ln_y}")));
    }
    let ly = ln_y - p.mu.ln();
    let lambda = p.effective_lambda();
    let z = if lambda == 0.0 {
        ly / p.sigma
    } else {
        (lambda * ly).exp_m1() / (p.sigma * lambda)
    };
    let jac = (lambda - 1.0) * ln_y - lambda * p.mu.ln() - p.sigma.ln();
    Ok(jac + log_symmetric_pdf(&p.family, z) - trunc.log_normalizer())
}

pub fn log_pdf(y: f64, p: &BcsParams) -> Result<f64> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(BcsError::Domain(format!("observation must be positive and finite, got {y}")));
    }
    let trunc = p.truncation()?;
    log_pdf_with(y.ln(), p, &trunc)
}

/// `log f_Y(y)` evaluated from `log y`, usable where `y` itself would overflow.
pub fn log_pdf_from_log(ln_y: f64, p: &BcsParams) -> Result<f64> {
    let trunc = p.truncation()?;
    log_pdf_with(ln_y, p, &trunc)
}

pub fn pdf(y: f64, p: &BcsParams) -> Result<f64> {
    Ok(log_pdf(y, p)?.exp())
}

/// `(P(Y <= y), P(Y > y))`, each computed without cancellation in its own tail.
pub fn cdf_pair(y: f64, p: &BcsParams) -> Result<(f64, f64)> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(BcsError::Domain(format!("observation must be positive and finite, got {y}")));
    }
    cdf_pair_from_log(y.ln(), p)
}

/// [`cdf_pair`] evaluated from `log y`, usable where `y` is not representable.
pub fn cdf_pair_from_log(ln_y: f64, p: &BcsParams) -> Result<(f64, f64)> {
    let trunc = p.truncation()?;
    let z = transform_from_log(ln_y, p)?;
    let lambda = p.effective_lambda();
    let (lower, upper) = if lambda == 0.0 {
        (symmetric_cdf(&p.family, z)?, symmetric_sf(&p.family, z)?)
    } else if lambda > 0.0 {
        let below = (symmetric_cdf(&p.family, z)? - trunc.cut_mass).max(0.0);
        (below, symmetric_sf(&p.family, z)?)
    } else {
        let above = (symmetric_sf(&p.family, z)? - trunc.cut_mass).max(0.0);
        (symmetric_cdf(&p.family, z)?, above)
    };
    Ok((lower / trunc.normalizer, upper / trunc.normalizer))
}

/// `F(y)` from `log y`.
pub fn cdf_from_log(ln_y: f64, p: &BcsParams) -> Result<f64> {
    let (lower, upper) = cdf_pair_from_log(ln_y, p)?;
    Ok(if lower <= 0.5 { lower } else { 1.0 - upper })
}

pub fn cdf(y: f64, p: &BcsParams) -> Result<f64> {
    let (lower, upper) = cdf_pair(y, p)?;
    Ok(if lower <= 0.5 { lower } else { 1.0 - upper })
}

/// Survival `1 − F(y)`.
pub fn sf(y: f64, p: &BcsParams) -> Result<f64> {
    let (lower, upper) = cdf_pair(y, p)?;
    Ok(if upper <= 0.5 { upper } else { 1.0 - lower })
}

/// Quantile `z_α` of the truncated standard law.
fn z_quantile(alpha: f64, p: &BcsParams, trunc: &TruncationInfo) -> Result<f64> {
    let lambda = p.effective_lambda();
    if lambda == 0.0 {
        return symmetric_quantile(&p.family, alpha);
    }
    let (lower, upper) = if lambda > 0.0 {
        (alpha * trunc.normalizer + trunc.cut_mass, (1.0 - alpha) * trunc.normalizer)
    } else {
        (alpha * trunc.normalizer, (1.0 - alpha) * trunc.normalizer + trunc.cut_mass)
    };
    if lower <= 0.5 {
        symmetric_quantile_split(&p.family, lower, true)
    } else {
        symmetric_quantile_split(&p.family, upper, false)
    }
}

pub fn quantile(alpha: f64, p: &BcsParams) -> Result<f64> {
    Ok(p.mu * log_relative_quantile(alpha, p)?.exp())
}

/// `log` of the α-quantile; stays finite where the quantile itself under- or overflows.
pub fn log_quantile(alpha: f64, p: &BcsParams) -> Result<f64> {
    Ok(p.mu.ln() + log_relative_quantile(alpha, p)?)
}

/// `log(y_α/μ)`.
fn log_relative_quantile(alpha: f64, p: &BcsParams) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(BcsError::Domain(format!("quantile level must lie in (0, 1), got {alpha}")));
    }
    let trunc = p.truncation()?;
    let z = z_quantile(alpha, p, &trunc)?;
    let lambda = p.effective_lambda();
    if lambda == 0.0 {
        return Ok(p.sigma * z);
    }
    let base = p.sigma * lambda * z;
    if lambda < 0.0 && base <= -1.0 {
        return Ok(f64::INFINITY);
    }
    if !(base > -1.0) {
        return Err(BcsError::Domain(format!("z = {z} lies outside the support")));
    }
    Ok(base.ln_1p() / lambda)
}

/// `n` draws by inversion of uniform variates from `rng`.
pub fn sample(n: usize, p: &BcsParams, rng: &mut RngStream) -> Result<Vec<f64>> {
    let trunc = p.truncation()?;
    (0..n)
        .map(|_| {
            let z = z_quantile(rng.next_uniform(), p, &trunc)?;
            inverse_transform(z, p)
        })
        .collect()
}

/// `E(Y^k)`; flagged as non-existent when the tail index is at least `1/k`.
pub fn moment(k: u32, p: &BcsParams) -> Result<Moment> {
    if k == 0 {
        return Err(BcsError::Domain("moment order must be >= 1".into()));
    }
    let missing = Moment {
        value: f64::INFINITY,
        exists: false,
    };
    if tail_index(p)? * k as f64 >= 1.0 {
        return Ok(missing);
    }
    let trunc = p.truncation()?;
    let lambda = p.effective_lambda();
    let kf = k as f64;
    let sl = p.sigma * lambda;
    let integrand = |s: f64| {
        let g = if lambda == 0.0 {
            kf * p.sigma * s
        } else {
            let b = sl * s;
            if b <= -1.0 {
                return 0.0;
            }
            kf / lambda * b.ln_1p()
        };
        (g + log_symmetric_pdf(&p.family, s)).exp()
    };
    let spec = QuadratureSpec::new(1e-12, 1e-10, 4000)?;
    let value = match integrate(integrand, trunc.support_lower, trunc.support_upper, &spec) {
        Ok(v) if v.is_finite() => v,
        _ => return Ok(missing),
    };
    Ok(Moment {
        value: p.mu.powi(k as i32) * value / trunc.normalizer,
        exists: true,
    })
}

/// `(3/4)(y_{0.75} − y_{0.25})/y_{0.5}` and `1.5 sinh(σ s_{0.75})`.
pub fn centile_cv(p: &BcsParams) -> Result<CentileCv> {
    let q25 = quantile(0.25, p)?;
    let q50 = quantile(0.5, p)?;
    let q75 = quantile(0.75, p)?;
    let s75 = symmetric_quantile(&p.family, 0.75)?;
    Ok(CentileCv {
        exact: 0.75 * (q75 - q25) / q50,
        approximation: 1.5 * (p.sigma * s75).sinh(),
    })
}

/// Parameters of `dY`.
pub fn rescale(p: &BcsParams, d: f64) -> Result<BcsParams> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(BcsError::InvalidParameter(format!("scale factor must be positive, got {d}")));
    }
    BcsParams::new(d * p.mu, p.sigma, p.lambda, p.family)
}

/// Parameters of `(Y/μ)^d`.
pub fn power_transform_law(p: &BcsParams, d: f64) -> Result<BcsParams> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(BcsError::InvalidParameter(format!("exponent must be positive, got {d}")));
    }
    BcsParams::new(1.0, d * p.sigma, p.lambda / d, p.family)
}
