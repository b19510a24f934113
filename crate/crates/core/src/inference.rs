//! Likelihood-ratio test for λ = 0, Anderson-Darling statistics and quantile residuals.

use crate::dist::{cdf_pair, BcsParams};
use crate::error::{BcsError, Result};
use crate::estimation::{fit_with, FitOptions, FitResult, LikelihoodContext};
use crate::numeric::{chi_squared_sf, std_normal_quantile};
use serde::{Deserialize, Serialize};

/// Probabilities are clamped to `[U_CLAMP, 1 − U_CLAMP]` before logs and reciprocals.
pub const U_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrTestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub loglik_null: f64,
    pub loglik_full: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdStatistics {
    pub ad: f64,
    pub adr: f64,
    pub ad2r: f64,
    /// Set when a fitted probability had to be pulled away from 0 or 1.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub aic: f64,
    pub ad: f64,
    pub adr: f64,
    pub ad2r: f64,
    pub clamped: bool,
    pub quantile_residuals: Vec<f64>,
}

/// LR statistic and χ²₁ p-value from two already fitted models.
pub fn lr_test_from_fits(full: &FitResult, null: &FitResult) -> Result<LrTestResult> {
    if !full.converged {
        return Err(BcsError::FitFailed {
            model: "full".into(),
            reason: "optimizer did not converge".into(),
        });
    }
    if !null.converged {
        return Err(BcsError::FitFailed {
            model: "lambda = 0".into(),
            reason: "optimizer did not converge".into(),
        });
    }
    let statistic = (2.0 * (full.loglik - null.loglik)).max(0.0);
    Ok(LrTestResult {
        statistic,
        p_value: chi_squared_sf(statistic, 1.0)?,
        loglik_null: null.loglik,
        loglik_full: full.loglik,
    })
}

/// Fits the model with λ free and with λ = 0, then compares them.
pub fn lr_test_lambda_zero(ctx: &LikelihoodContext, options: &FitOptions) -> Result<LrTestResult> {
    let (full, null) = nested_fits(ctx, options)?;
    lr_test_from_fits(&full, &null)
}

/// Null fit plus the full fit started both from the default point and from the
/// null estimate; the better converged full fit is kept.
pub(crate) fn nested_fits(
    ctx: &LikelihoodContext,
    options: &FitOptions,
) -> Result<(FitResult, FitResult)> {
    let full_ctx = ctx.clone().with_fixed_lambda(None);
    let null_ctx = ctx.clone().with_fixed_lambda(Some(0.0));
    let null = fit_with(&null_ctx, None, options)?;
    let mut attempts = vec![fit_with(&full_ctx, None, options)];
    if null.converged {
        attempts.push(fit_with(&full_ctx, Some(null.params), options));
    }
    let mut full: Option<FitResult> = None;
    let mut last_err = None;
    for attempt in attempts {
        match attempt {
            Ok(f) => {
                let better = match &full {
                    None => true,
                    Some(cur) => {
                        (f.converged && !cur.converged)
                            || (f.converged == cur.converged && f.loglik > cur.loglik)
                    }
                };
                if better {
                    full = Some(f);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match full {
        Some(f) => Ok((f, null)),
        None => Err(BcsError::FitFailed {
            model: "full".into(),
            reason: last_err.map_or_else(|| "no attempt succeeded".into(), |e| e.to_string()),
        }),
    }
}

/// AD, ADR and AD2R from fitted probabilities `uᵢ = F̂(yᵢ)` (any order).
pub fn anderson_darling_from_probabilities(u: &[f64]) -> Result<AdStatistics> {
    if u.len() < 2 {
        return Err(BcsError::Domain("Anderson-Darling statistics need n >= 2".into()));
    }
    if let Some(bad) = u.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(BcsError::Domain(format!("probability outside [0, 1]: {bad}")));
    }
    let mut clamped = false;
    let mut s: Vec<f64> = u
        .iter()
        .map(|&v| {
            let c = v.clamp(U_CLAMP, 1.0 - U_CLAMP);
            clamped |= c != v;
            c
        })
        .collect();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let nf = n as f64;
    let (mut ad_sum, mut adr_sum, mut ad2r_sum) = (0.0, 0.0, 0.0);
    let (mut sum_u, mut sum_log_upper) = (0.0, 0.0);
    for i in 0..n {
        let k = (2 * i + 1) as f64;
        let upper_rev = 1.0 - s[n - 1 - i];
        ad_sum += k * (s[i].ln() + upper_rev.ln());
        adr_sum += k * upper_rev.ln();
        ad2r_sum += k / upper_rev;
        sum_u += s[i];
        sum_log_upper += (1.0 - s[i]).ln();
    }
    Ok(AdStatistics {
        ad: -nf - ad_sum / nf,
        adr: 0.5 * nf - 2.0 * sum_u - adr_sum / nf,
        ad2r: 2.0 * sum_log_upper + ad2r_sum / nf,
        clamped,
    })
}

/// AD suite for data under an arbitrary fitted cdf.
pub fn anderson_darling_suite<F>(data: &[f64], cdf: F) -> Result<AdStatistics>
where
    F: Fn(f64) -> Result<f64>,
{
    let u = data.iter().map(|&y| cdf(y)).collect::<Result<Vec<_>>>()?;
    anderson_darling_from_probabilities(&u)
}

/// `Φ⁻¹(F̂(y))`, computed from whichever tail mass is smaller.
pub fn quantile_residual(y: f64, fitted: &BcsParams) -> Result<f64> {
    let (lower, upper) = cdf_pair(y, fitted)?;
    let lower = lower.clamp(U_CLAMP, 1.0 - U_CLAMP);
    let upper = upper.clamp(U_CLAMP, 1.0 - U_CLAMP);
    if lower <= upper {
        std_normal_quantile(lower)
    } else {
        Ok(-std_normal_quantile(upper)?)
    }
}

pub fn quantile_residuals(data: &[f64], fitted: &BcsParams) -> Result<Vec<f64>> {
    data.iter().map(|&y| quantile_residual(y, fitted)).collect()
}

/// Pairs `(Φ⁻¹((i − 0.5)/n), r₍ᵢ₎)` for a normal QQ plot.
pub fn qq_data(residuals: &[f64]) -> Result<Vec<(f64, f64)>> {
    let mut sorted = residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, r)| Ok((std_normal_quantile((i as f64 + 0.5) / n)?, r)))
        .collect()
}

/// Goodness-of-fit summary for a fitted model.
pub fn gof_report(data: &[f64], fit: &FitResult) -> Result<GofReport> {
    let ad = anderson_darling_suite(data, |y| cdf_pair(y, &fit.params).map(|(lo, _)| lo))?;
    Ok(GofReport {
        aic: fit.aic,
        ad: ad.ad,
        adr: ad.adr,
        ad2r: ad.ad2r,
        clamped: ad.clamped,
        quantile_residuals: quantile_residuals(data, &fit.params)?,
    })
}
