//! Log-likelihood, score vector and observed Hessian.

use crate::dist::{BcsParams, LAMBDA_SEAM};
use crate::error::{BcsError, Result};
use crate::numeric::linalg::Matrix;
use crate::numeric::ln_gamma;
use crate::symmetric::{log_generator, symmetric_sf, DensityFamily};

/// Data and model structure for likelihood evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodContext {
    pub data: Vec<f64>,
    pub family: DensityFamily,
    /// When set, λ is held at this value during fitting.
    pub fixed_lambda: Option<f64>,
    /// Whether τ or q is estimated.
    pub fit_extra: bool,
}

impl LikelihoodContext {
    pub fn new(data: Vec<f64>, family: DensityFamily) -> Result<Self> {
        if data.is_empty() {
            return Err(BcsError::Domain("data set is empty".into()));
        }
        if let Some(bad) = data.iter().find(|y| !(**y > 0.0 && y.is_finite())) {
            return Err(BcsError::Domain(format!("observations must be positive, got {bad}")));
        }
        family.validate()?;
        Ok(Self {
            data,
            family,
            fixed_lambda: None,
            fit_extra: family.extra().is_some(),
        })
    }

    pub fn with_fixed_lambda(mut self, lambda: Option<f64>) -> Self {
        self.fixed_lambda = lambda;
        self
    }

    pub fn with_fit_extra(mut self, fit_extra: bool) -> Self {
        self.fit_extra = fit_extra && self.family.extra().is_some();
        self
    }

    pub fn n(&self) -> usize {
        self.data.len()
    }

    /// Whether the score and Hessian carry an extra-parameter coordinate.
    pub fn has_extra(&self) -> bool {
        self.fit_extra && self.family.extra().is_some()
    }

    /// Number of parameters estimated by a fit.
    pub fn free_parameters(&self) -> usize {
        2 + usize::from(self.fixed_lambda.is_none()) + usize::from(self.has_extra())
    }

    fn dimension(&self) -> usize {
        3 + usize::from(self.has_extra())
    }
}

/// Per-observation derivatives of `z` and the weight, plus the truncation terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeBundle {
    pub z: f64,
    pub dz_dmu: f64,
    pub dz_dlambda: f64,
    pub d2z_dmu2: f64,
    pub d2z_dlambda2: f64,
    pub d2z_dmudlambda: f64,
    /// `r((σλ)⁻²) / R((σ|λ|)⁻¹)`, zero at λ = 0.
    pub xi: f64,
    pub dxi_dsigma: f64,
    pub dxi_dlambda: f64,
    pub varpi: f64,
    pub dvarpi_dz: f64,
}

#[derive(Debug, Clone, Copy)]
struct ZDerivs {
    z: f64,
    mu: f64,
    lambda: f64,
    mumu: f64,
    lambdalambda: f64,
    mulambda: f64,
}

/// `Σ_{k≥m} x^{k−m} (k−1)(k−2)…/k!` style series used for small `λ log(y/μ)`.
fn series(x: f64, m: u32) -> f64 {
    let mut sum = 0.0;
    let mut xp = 1.0;
    let mut fact: f64 = (1..=m).map(f64::from).product();
    for k in m..m + 25 {
        if k > m {
            fact *= f64::from(k);
            xp *= x;
        }
        let kf = f64::from(k);
        let coef = if m == 2 {
            kf - 1.0
        } else {
            (kf - 1.0) * (kf - 2.0)
        };
        let term = xp * coef / fact;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

fn z_derivs(ly: f64, mu: f64, sigma: f64, lambda: f64) -> ZDerivs {
    if lambda == 0.0 {
        return ZDerivs {
            z: ly / sigma,
            mu: -1.0 / (mu * sigma),
            lambda: ly * ly / (2.0 * sigma),
            mumu: 1.0 / (mu * mu * sigma),
            lambdalambda: ly * ly * ly / (3.0 * sigma),
            mulambda: -ly / (mu * sigma),
        };
    }
    let x = lambda * ly;
    let w = x.exp();
    let (dl, dll) = if x.abs() < 0.1 {
        (ly * ly / sigma * series(x, 2), ly * ly * ly / sigma * series(x, 3))
    } else {
        (
            (1.0 + w * (x - 1.0)) / (sigma * lambda * lambda),
            (-2.0 + w * (2.0 - 2.0 * x + x * x)) / (sigma * lambda * lambda * lambda),
        )
    };
    ZDerivs {
        z: x.exp_m1() / (sigma * lambda),
        mu: -w / (mu * sigma),
        lambda: dl,
        mumu: (lambda + 1.0) * w / (mu * mu * sigma),
        lambdalambda: dll,
        mulambda: -w * ly / (mu * sigma),
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct XiTerms {
    xi: f64,
    dsigma: f64,
    dlambda: f64,
    log_norm: f64,
}

fn xi_terms(p: &BcsParams, lambda: f64) -> Result<XiTerms> {
    if lambda == 0.0 {
        return Ok(XiTerms::default());
    }
    let c = 1.0 / (p.sigma * lambda.abs());
    let (l, l1, _) = log_generator(&p.family, c * c);
    let cut = symmetric_sf(&p.family, c)?;
    let norm = 1.0 - cut;
    let xi = l.exp() / norm;
    let dxi_dc = if xi == 0.0 { 0.0 } else { xi * (2.0 * c * l1 - xi) };
    Ok(XiTerms {
        xi,
        dsigma: -dxi_dc * c / p.sigma,
        dlambda: -dxi_dc * c / lambda,
        log_norm: (-cut).ln_1p(),
    })
}

fn check_seam(p: &BcsParams) -> Result<f64> {
    if p.lambda != 0.0 && p.lambda.abs() < LAMBDA_SEAM {
        return Err(BcsError::Seam(p.lambda));
    }
    Ok(p.lambda)
}

/// Sample log-likelihood `Σ ℓ(yᵢ)`; `−∞` when an observation has zero density.
pub fn loglik(ctx: &LikelihoodContext, p: &BcsParams) -> Result<f64> {
    p.validate()?;
    let lambda = p.effective_lambda();
    let xi = xi_terms(p, lambda)?;
    let (ln_mu, ln_sigma) = (p.mu.ln(), p.sigma.ln());
    let mut total = 0.0;
    for &y in &ctx.data {
        let ln_y = y.ln();
        let z = z_value(ln_y - ln_mu, p.sigma, lambda);
        let (log_r, _, _) = log_generator(&p.family, z * z);
        total += (lambda - 1.0) * ln_y - lambda * ln_mu - ln_sigma + log_r;
    }
    total -= ctx.n() as f64 * xi.log_norm;
    if total.is_nan() {
        return Err(BcsError::Evaluation("log-likelihood is NaN".into()));
    }
    Ok(total)
}

fn z_value(ly: f64, sigma: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        ly / sigma
    } else {
        (lambda * ly).exp_m1() / (sigma * lambda)
    }
}

/// Derivatives of `z` and of the weight at one observation.
pub fn derivative_bundle(y: f64, p: &BcsParams) -> Result<DerivativeBundle> {
    p.validate()?;
    if !(y > 0.0 && y.is_finite()) {
        return Err(BcsError::Domain(format!("observation must be positive, got {y}")));
    }
    let lambda = p.effective_lambda();
    let zd = z_derivs((y / p.mu).ln(), p.mu, p.sigma, lambda);
    let xi = xi_terms(p, lambda)?;
    let (_, l1, l2) = log_generator(&p.family, zd.z * zd.z);
    Ok(DerivativeBundle {
        z: zd.z,
        dz_dmu: zd.mu,
        dz_dlambda: zd.lambda,
        d2z_dmu2: zd.mumu,
        d2z_dlambda2: zd.lambdalambda,
        d2z_dmudlambda: zd.mulambda,
        xi: xi.xi,
        dxi_dsigma: xi.dsigma,
        dxi_dlambda: xi.dlambda,
        varpi: -2.0 * l1,
        dvarpi_dz: -4.0 * zd.z * l2,
    })
}

/// Per-observation pieces shared by the score and the Hessian.
struct ObsTerms {
    zd: ZDerivs,
    /// `ϖ z`
    a: f64,
    /// `z dϖ/dz + ϖ`
    b: f64,
}

fn obs_terms(family: &DensityFamily, ly: f64, p: &BcsParams, lambda: f64) -> ObsTerms {
    let zd = z_derivs(ly, p.mu, p.sigma, lambda);
    let z = zd.z;
    let u = z * z;
    let (_, l1, l2) = log_generator(family, u);
    let (a, b) = if z == 0.0 {
        (0.0, if l1.is_finite() { -2.0 * l1 } else { 0.0 })
    } else {
        (-2.0 * z * l1, -2.0 * l1 - 4.0 * u * l2)
    };
    ObsTerms { zd, a, b }
}

fn analytic_score(ctx: &LikelihoodContext, p: &BcsParams) -> Result<[f64; 3]> {
    p.validate()?;
    let lambda = check_seam(p)?;
    let xi = xi_terms(p, lambda)?;
    let (mu, sigma) = (p.mu, p.sigma);
    let mut g = [0.0; 3];
    for &y in &ctx.data {
        let ly = (y / mu).ln();
        let t = obs_terms(&p.family, ly, p, lambda);
        g[0] += -lambda / mu - t.a * t.zd.mu;
        g[1] += (-1.0 + t.a * t.zd.z) / sigma;
        g[2] += ly - t.a * t.zd.lambda;
    }
    if lambda != 0.0 {
        let n = ctx.n() as f64;
        g[1] += n * xi.xi / (sigma * sigma * lambda.abs());
        g[2] += n * lambda.signum() * xi.xi / (sigma * lambda * lambda);
    }
    Ok(g)
}

/// `(τ, K)` when `r(u) ~ K u^{−(τ+1)/2}` as `u → ∞`.
fn polynomial_tail(family: &DensityFamily) -> Option<(f64, f64)> {
    use std::f64::consts::PI;
    match *family {
        DensityFamily::Cauchy => Some((1.0, 1.0 / PI)),
        DensityFamily::CanonicalSlash => Some((1.0, 1.0 / (2.0 * PI).sqrt())),
        DensityFamily::StudentT { tau } => {
            let ln_k = ln_gamma(0.5 * (tau + 1.0)) - ln_gamma(0.5 * tau) - 0.5 * (tau * PI).ln()
                + 0.5 * (tau + 1.0) * tau.ln();
            Some((tau, ln_k.exp()))
        }
        DensityFamily::Slash { q } => {
            let ln_k = q.ln() + (0.5 * q - 1.0) * std::f64::consts::LN_2 - 0.5 * PI.ln()
                + ln_gamma(0.5 * (q + 1.0));
            Some((q, ln_k.exp()))
        }
        _ => None,
    }
}

/// Limit of the λλ truncation term as λ → 0; both sides agree.
///
/// With `r(u) ~ K u^{−(τ+1)/2}` the term behaves like `|λ|^{τ−2}`, so it
/// vanishes for τ > 2 and is unbounded for 1 < τ < 2.
fn lambda_curvature_at_zero(family: &DensityFamily, n: f64, sigma: f64) -> f64 {
    match polynomial_tail(family) {
        Some((tau, k)) if tau == 1.0 => n * k * k * sigma * sigma,
        Some((tau, k)) if tau == 2.0 => n * k * sigma * sigma,
        Some((tau, _)) if tau > 1.0 && tau < 2.0 => f64::INFINITY,
        _ => 0.0,
    }
}

fn analytic_hessian(ctx: &LikelihoodContext, p: &BcsParams) -> Result<[[f64; 3]; 3]> {
    p.validate()?;
    let lambda = check_seam(p)?;
    let xi = xi_terms(p, lambda)?;
    let (mu, sigma) = (p.mu, p.sigma);
    let s2 = sigma * sigma;
    let mut h = [[0.0; 3]; 3];
    for &y in &ctx.data {
        let ly = (y / mu).ln();
        let ObsTerms { zd, a, b } = obs_terms(&p.family, ly, p, lambda);
        let z = zd.z;
        let zb_a = z * b + a;
        h[0][0] += lambda / (mu * mu) - b * zd.mu * zd.mu - a * zd.mumu;
        h[1][1] += (1.0 - z * z * b - 2.0 * a * z) / s2;
        h[2][2] += -b * zd.lambda * zd.lambda - a * zd.lambdalambda;
        h[0][1] += zd.mu / sigma * zb_a;
        h[0][2] += -1.0 / mu - b * zd.mu * zd.lambda - a * zd.mulambda;
        h[1][2] += zd.lambda / sigma * zb_a;
    }
    if lambda != 0.0 {
        let n = ctx.n() as f64;
        let al = lambda.abs();
        let sg = lambda.signum();
        h[1][1] += n * (xi.dsigma / (s2 * al) - 2.0 * xi.xi / (s2 * sigma * al));
        h[2][2] += n
            * sg
            * (xi.dlambda / (sigma * lambda * lambda) - 2.0 * xi.xi / (sigma * lambda.powi(3)));
        h[1][2] += n * (xi.dlambda / (s2 * al) - sg * xi.xi / (s2 * lambda * lambda));
    } else {
        h[2][2] += lambda_curvature_at_zero(&p.family, ctx.n() as f64, sigma);
    }
    h[1][0] = h[0][1];
    h[2][0] = h[0][2];
    h[2][1] = h[1][2];
    Ok(h)
}

/// Step used for derivatives in the extra parameter.
pub(crate) fn extra_step(value: f64) -> f64 {
    1e-5 * (1.0 + value.abs())
}

fn shifted_extra(p: &BcsParams, delta: f64) -> BcsParams {
    let v = p.family.extra().unwrap_or(0.0);
    BcsParams {
        family: p.family.with_extra(v + delta),
        ..*p
    }
}

/// Score in `(μ, σ, λ[, extra])`; the extra-parameter entry is a central difference.
pub fn score(ctx: &LikelihoodContext, p: &BcsParams) -> Result<Vec<f64>> {
    let mut g = analytic_score(ctx, p)?.to_vec();
    if ctx.has_extra() {
        let h = extra_step(p.family.extra().unwrap_or(0.0));
        let up = loglik(ctx, &shifted_extra(p, h))?;
        let down = loglik(ctx, &shifted_extra(p, -h))?;
        g.push((up - down) / (2.0 * h));
    }
    Ok(g)
}

/// Observed Hessian in `(μ, σ, λ[, extra])`; the extra-parameter row and
/// column come from central differences.
pub fn hessian(ctx: &LikelihoodContext, p: &BcsParams) -> Result<Matrix> {
    let h3 = analytic_hessian(ctx, p)?;
    let dim = ctx.dimension();
    let mut h = vec![vec![0.0; dim]; dim];
    for i in 0..3 {
        h[i][..3].copy_from_slice(&h3[i]);
    }
    if ctx.has_extra() {
        let step = extra_step(p.family.extra().unwrap_or(0.0));
        let (up, down) = (shifted_extra(p, step), shifted_extra(p, -step));
        let gu = analytic_score(ctx, &up)?;
        let gd = analytic_score(ctx, &down)?;
        for j in 0..3 {
            let v = (gu[j] - gd[j]) / (2.0 * step);
            h[3][j] = v;
            h[j][3] = v;
        }
        let (lu, l0, ld) = (loglik(ctx, &up)?, loglik(ctx, p)?, loglik(ctx, &down)?);
        h[3][3] = (lu - 2.0 * l0 + ld) / (step * step);
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{log_pdf, sample, transform};
    use crate::numeric::RngStream;

    fn families() -> Vec<DensityFamily> {
        vec![
            DensityFamily::Normal,
            DensityFamily::DoubleExponential,
            DensityFamily::PowerExponential { tau: 1.5 },
            DensityFamily::Cauchy,
            DensityFamily::StudentT { tau: 4.0 },
            DensityFamily::LogisticI,
            DensityFamily::LogisticII,
            DensityFamily::CanonicalSlash,
            DensityFamily::Slash { q: 4.0 },
        ]
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let scale = b.iter().map(|x| x.abs()).fold(1.0, f64::max);
        diff / scale
    }

    fn ctx_for(p: &BcsParams, n: usize, seed: u64) -> LikelihoodContext {
        let data = sample(n, p, &mut RngStream::new(seed, 0)).unwrap();
        LikelihoodContext::new(data, p.family).unwrap().with_fit_extra(false)
    }

    fn fd_score(ctx: &LikelihoodContext, p: &BcsParams) -> Vec<f64> {
        let f = |x: &[f64]| {
            loglik(
                ctx,
                &BcsParams {
                    mu: x[0],
                    sigma: x[1],
                    lambda: x[2],
                    family: p.family,
                },
            )
        };
        let x = [p.mu, p.sigma, p.lambda];
        (0..3)
            .map(|i| {
                let h = 1e-5 * (1.0 + x[i].abs());
                let mut up = x;
                let mut dn = x;
                up[i] += h;
                dn[i] -= h;
                (f(&up).unwrap() - f(&dn).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn single_observation_at_mu() {
        let ctx = LikelihoodContext::new(vec![3.0], DensityFamily::Normal).unwrap();
        let p = BcsParams::new(3.0, 0.5, 0.0, DensityFamily::Normal).unwrap();
        let expected = -(3f64.ln()) - 0.5f64.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((loglik(&ctx, &p).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn loglik_equals_sum_of_log_pdf() {
        for fam in families() {
            for &lambda in &[-0.7, 0.0, 0.4, 1.3] {
                let p = BcsParams::new(2.0, 0.4, lambda, fam).unwrap();
                let ctx = ctx_for(&p, 40, 3);
                let direct: f64 = ctx.data.iter().map(|&y| log_pdf(y, &p).unwrap()).sum();
                let l = loglik(&ctx, &p).unwrap();
                assert!((l - direct).abs() < 1e-12 * direct.abs().max(1.0), "{fam} {lambda}");
            }
        }
    }

    #[test]
    fn bundle_limits_at_zero() {
        let p = BcsParams::new(2.0, 0.5, 0.0, DensityFamily::Normal).unwrap();
        let b = derivative_bundle(3.0, &p).unwrap();
        let ly = (1.5f64).ln();
        assert_eq!(b.dz_dmu, -1.0 / (2.0 * 0.5));
        assert!((b.d2z_dmudlambda + ly / (2.0 * 0.5)).abs() < 1e-15);
        assert!((b.dz_dlambda - ly * ly / (2.0 * 0.5)).abs() < 1e-15);
        assert!((b.d2z_dlambda2 - ly.powi(3) / (3.0 * 0.5)).abs() < 1e-15);
        assert_eq!(b.xi, 0.0);
        assert_eq!(b.varpi, 1.0);
    }

    #[test]
    fn bundle_matches_finite_differences() {
        for &lambda in &[-0.7, 0.4, 1e-6] {
            for &y in &[0.4, 1.3, 3.5] {
                let (mu, sigma) = (1.1, 0.6);
                let p = BcsParams::new(mu, sigma, lambda, DensityFamily::StudentT { tau: 4.0 })
                    .unwrap();
                let b = derivative_bundle(y, &p).unwrap();
                let z = |m: f64, l: f64| {
                    transform(y, &BcsParams { mu: m, lambda: l, ..p }).unwrap()
                };
                let h = 1e-4;
                let pairs = [
                    (b.dz_dmu, (z(mu + h, lambda) - z(mu - h, lambda)) / (2.0 * h)),
                    (b.dz_dlambda, (z(mu, lambda + h) - z(mu, lambda - h)) / (2.0 * h)),
                    (
                        b.d2z_dmu2,
                        (z(mu + h, lambda) - 2.0 * z(mu, lambda) + z(mu - h, lambda)) / (h * h),
                    ),
                    (
                        b.d2z_dlambda2,
                        (z(mu, lambda + h) - 2.0 * z(mu, lambda) + z(mu, lambda - h)) / (h * h),
                    ),
                    (
                        b.d2z_dmudlambda,
                        (z(mu + h, lambda + h) - z(mu + h, lambda - h) - z(mu - h, lambda + h)
                            + z(mu - h, lambda - h))
                            / (4.0 * h * h),
                    ),
                ];
                for (k, (a, fd)) in pairs.iter().enumerate() {
                    let rel = (a - fd).abs() / fd.abs().max(1e-3);
                    let tol = if k == 0 || k == 1 { 1e-6 } else { 1e-5 };
                    assert!(rel < tol, "λ={lambda} y={y} entry {k}: {a} vs {fd}");
                }
            }
        }
    }

    #[test]
    fn xi_derivatives_match_finite_differences() {
        for fam in families() {
            for &lambda in &[-0.7, 0.4, 1.3] {
                let p = BcsParams::new(1.0, 0.8, lambda, fam).unwrap();
                let x = xi_terms(&p, lambda).unwrap();
                let h = 1e-6;
                let xs = |s: f64, l: f64| {
                    xi_terms(&BcsParams { sigma: s, lambda: l, ..p }, l).unwrap().xi
                };
                let ds = (xs(0.8 + h, lambda) - xs(0.8 - h, lambda)) / (2.0 * h);
                let dl = (xs(0.8, lambda + h) - xs(0.8, lambda - h)) / (2.0 * h);
                assert!((x.dsigma - ds).abs() < 1e-6 * (1.0 + ds.abs()), "{fam}");
                assert!((x.dlambda - dl).abs() < 1e-6 * (1.0 + dl.abs()), "{fam}");
            }
        }
    }

    #[test]
    fn score_matches_finite_differences() {
        for fam in families() {
            for &lambda in &[-0.7, 0.0, 0.4, 1.3] {
                let p = BcsParams::new(1.5, 0.5, lambda, fam).unwrap();
                let ctx = ctx_for(&p, 50, 17);
                let q = BcsParams::new(1.4, 0.55, lambda, fam).unwrap();
                let g = score(&ctx, &q).unwrap();
                let fd = fd_score(&ctx, &q);
                assert!(rel_err(&g, &fd) < 1e-6, "{fam} λ={lambda}: {g:?} {fd:?}");
            }
        }
    }

    #[test]
    fn normal_log_symmetric_sigma_score() {
        let p = BcsParams::new(2.0, 0.3, 0.0, DensityFamily::Normal).unwrap();
        let ctx = ctx_for(&p, 30, 5);
        let g = score(&ctx, &p).unwrap();
        let n = ctx.n() as f64;
        let sz2: f64 = ctx.data.iter().map(|y| ((y / 2.0).ln() / 0.3).powi(2)).sum();
        assert!((g[1] - (-n / 0.3 + sz2 / 0.3)).abs() < 1e-10);
    }

    #[test]
    fn seam_is_rejected() {
        let p = BcsParams::new(2.0, 0.3, 1e-9, DensityFamily::Normal).unwrap();
        let ctx = ctx_for(&p.with_lambda(0.0), 10, 5);
        assert!(matches!(score(&ctx, &p), Err(BcsError::Seam(_))));
        assert!(matches!(hessian(&ctx, &p), Err(BcsError::Seam(_))));
    }

    #[test]
    fn hessian_matches_score_differences() {
        for fam in families() {
            for &lambda in &[-0.7, 0.4, 1.3] {
                let p = BcsParams::new(1.0, 0.5, lambda, fam).unwrap();
                let ctx = ctx_for(&p, 50, 23);
                let h = hessian(&ctx, &p).unwrap();
                let x = [p.mu, p.sigma, p.lambda];
                for j in 0..3 {
                    let step = 1e-5 * (1.0 + x[j].abs());
                    let mut up = x;
                    let mut dn = x;
                    up[j] += step;
                    dn[j] -= step;
                    let mk = |v: [f64; 3]| BcsParams {
                        mu: v[0],
                        sigma: v[1],
                        lambda: v[2],
                        family: fam,
                    };
                    let gu = score(&ctx, &mk(up)).unwrap();
                    let gd = score(&ctx, &mk(dn)).unwrap();
                    let col: Vec<f64> = (0..3).map(|i| (gu[i] - gd[i]) / (2.0 * step)).collect();
                    let analytic: Vec<f64> = (0..3).map(|i| h[i][j]).collect();
                    assert!(rel_err(&analytic, &col) < 1e-4, "{fam} λ={lambda} col {j}");
                }
                for i in 0..3 {
                    for j in 0..3 {
                        assert_eq!(h[i][j], h[j][i], "{fam} λ={lambda} {h:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn lambda_curvature_limit_for_polynomial_tails() {
        for fam in [
            DensityFamily::Cauchy,
            DensityFamily::CanonicalSlash,
            DensityFamily::Slash { q: 1.0 },
            DensityFamily::StudentT { tau: 2.0 },
            DensityFamily::Slash { q: 2.0 },
        ] {
            let p = BcsParams::new(1.0, 0.7, 0.0, fam).unwrap();
            let ctx = ctx_for(&p, 40, 8);
            let at = |l: f64| hessian(&ctx, &p.with_lambda(l)).unwrap()[2][2];
            let (left, mid, right) = (at(-1e-5), at(0.0), at(1e-5));
            assert!((left - mid).abs() < 1e-3 * mid.abs(), "{fam}: {left} {mid} {right}");
            assert!((right - mid).abs() < 1e-3 * mid.abs(), "{fam}: {left} {mid} {right}");
        }
        let p = BcsParams::new(1.0, 0.7, 0.0, DensityFamily::StudentT { tau: 1.5 }).unwrap();
        let ctx = ctx_for(&p, 40, 8);
        assert_eq!(hessian(&ctx, &p).unwrap()[2][2], f64::INFINITY);
    }

    #[test]
    fn extra_parameter_entries() {
        let p = BcsParams::new(1.0, 0.5, 0.3, DensityFamily::StudentT { tau: 5.0 }).unwrap();
        let ctx = ctx_for(&p, 200, 1).with_fit_extra(true);
        let g = score(&ctx, &p).unwrap();
        assert_eq!(g.len(), 4);
        let h = hessian(&ctx, &p).unwrap();
        assert_eq!(h.len(), 4);
        assert_eq!(h[3][1], h[1][3]);
    }
}
