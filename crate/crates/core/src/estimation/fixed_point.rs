//! The weighted fixed-point system satisfied by `(μ̂, σ̂)` at fixed λ.

use super::likelihood::LikelihoodContext;
use crate::dist::BcsParams;
use crate::error::Result;
use crate::symmetric::{log_generator, symmetric_sf, DensityFamily};
use serde::{Deserialize, Serialize};

/// Relative residuals `(rhs − μ̂)/μ̂` and `(rhs − σ̂²)/σ̂²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResiduals {
    pub mu: f64,
    pub sigma: f64,
}

/// Truncation correction `δ = c · r(c²)/R(c)` with `c = 1/(σ|λ|)`.
pub fn truncation_delta(family: &DensityFamily, sigma: f64, lambda: f64) -> Result<f64> {
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let c = 1.0 / (sigma * lambda.abs());
    let r = log_generator(family, c * c).0.exp();
    Ok(c * r / (1.0 - symmetric_sf(family, c)?))
}

/// Right-hand sides of the μ and σ² equations evaluated at `p`.
pub fn fixed_point_rhs(ctx: &LikelihoodContext, p: &BcsParams) -> Result<(f64, f64)> {
    p.validate()?;
    let lambda = p.effective_lambda();
    let n = ctx.n() as f64;
    let weight = |z: f64| -2.0 * log_generator(&p.family, z * z).1;
    if lambda == 0.0 {
        let (mut sw, mut swl, mut swl2) = (0.0, 0.0, 0.0);
        for &y in &ctx.data {
            let ly = (y / p.mu).ln();
            let w = weight(ly / p.sigma);
            sw += w;
            swl += w * y.ln();
            swl2 += w * ly * ly;
        }
        return Ok(((swl / sw).exp(), swl2 / n));
    }
    let delta = truncation_delta(&p.family, p.sigma, lambda)?;
    let (mut s_mu, mut s_sigma) = (0.0, 0.0);
    for &y in &ctx.data {
        let ly = (y / p.mu).ln();
        let em1 = (lambda * ly).exp_m1();
        let z = em1 / (p.sigma * lambda);
        let w = weight(z);
        s_mu += w * (lambda * y.ln()).exp() * z;
        s_sigma += w * em1 * em1;
    }
    let mu = (s_mu / (n * p.sigma * lambda)).powf(1.0 / lambda);
    let sigma2 = s_sigma / (n * lambda * lambda * (1.0 - delta));
    Ok((mu, sigma2))
}

/// Normalized residuals of the fixed-point system at a fitted `p_hat`.
pub fn fixed_point_check(ctx: &LikelihoodContext, p_hat: &BcsParams) -> Result<FixedPointResiduals> {
    let (mu, sigma2) = fixed_point_rhs(ctx, p_hat)?;
    Ok(FixedPointResiduals {
        mu: (mu - p_hat.mu) / p_hat.mu,
        sigma: (sigma2 - p_hat.sigma * p_hat.sigma) / (p_hat.sigma * p_hat.sigma),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::sample;
    use crate::estimation::fit::{fit_with, FitOptions};
    use crate::numeric::RngStream;

    fn fitted(truth: &BcsParams, n: usize, seed: u64) -> (LikelihoodContext, BcsParams) {
        let y = sample(n, truth, &mut RngStream::new(seed, 0)).unwrap();
        let ctx = LikelihoodContext::new(y, truth.family)
            .unwrap()
            .with_fixed_lambda(Some(truth.lambda))
            .with_fit_extra(false);
        let opts = FitOptions {
            tolerance: 1e-9,
            ..FitOptions::default()
        };
        let r = fit_with(&ctx, None, &opts).unwrap();
        assert!(r.converged, "{r:?}");
        (ctx, r.params)
    }

    #[test]
    fn residuals_vanish_at_fixed_lambda_mle() {
        let cases = [
            BcsParams::new(2.0, 0.5, 1.0, DensityFamily::Normal).unwrap(),
            BcsParams::new(2.0, 0.6, -0.7, DensityFamily::StudentT { tau: 4.0 }).unwrap(),
            BcsParams::new(1.0, 0.4, 0.0, DensityFamily::LogisticI).unwrap(),
            BcsParams::new(1.0, 0.8, 0.5, DensityFamily::Slash { q: 3.0 }).unwrap(),
        ];
        for (i, truth) in cases.iter().enumerate() {
            let (ctx, p) = fitted(truth, 500, 40 + i as u64);
            let r = fixed_point_check(&ctx, &p).unwrap();
            assert!(r.mu.abs() < 1e-6 && r.sigma.abs() < 1e-6, "{truth:?}: {r:?}");
        }
    }

    #[test]
    fn unsquared_generator_argument_leaves_residual() {
        let truth = BcsParams::new(2.0, 0.5, 1.0, DensityFamily::Normal).unwrap();
        let (ctx, p) = fitted(&truth, 500, 3);
        let (_, sigma2) = fixed_point_rhs(&ctx, &p).unwrap();
        let c: f64 = 1.0 / (p.sigma * p.lambda.abs());
        let squared = truncation_delta(&p.family, p.sigma, p.lambda).unwrap();
        let r_c = log_generator(&p.family, c).0.exp();
        let unsquared = c * r_c / (1.0 - symmetric_sf(&p.family, c).unwrap());
        let alt = sigma2 * (1.0 - squared) / (1.0 - unsquared);
        let residual = (alt - p.sigma * p.sigma) / (p.sigma * p.sigma);
        assert!(residual.abs() > 1e-2, "{residual}");
    }

    #[test]
    fn geometric_mean_at_log_normal() {
        let truth = BcsParams::new(3.0, 0.4, 0.0, DensityFamily::Normal).unwrap();
        let (ctx, p) = fitted(&truth, 300, 8);
        let n = ctx.n() as f64;
        let gm = (ctx.data.iter().map(|y| y.ln()).sum::<f64>() / n).exp();
        let (mu, _) = fixed_point_rhs(&ctx, &p).unwrap();
        assert!((mu / gm - 1.0).abs() < 1e-14);
        assert!((p.mu / gm - 1.0).abs() < 1e-9);
    }
}
