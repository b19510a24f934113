//! Maximum-likelihood fitting by BFGS on `(log μ, log σ, λ, log extra)`
//! followed by Newton refinement.

use super::likelihood::{hessian, loglik, score, LikelihoodContext};
use crate::dist::{BcsParams, LAMBDA_SEAM};
use crate::error::{BcsError, Result};
use crate::numeric::linalg::{cholesky, cholesky_solve, dot, invert, norm2, Matrix};
use crate::symmetric::{symmetric_quantile, DensityFamily};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub derivatives: DerivativeMode,
    /// Gradient-norm tolerance in the unconstrained coordinates.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            derivatives: DerivativeMode::Analytic,
            tolerance: 1e-6,
            max_iterations: 500,
        }
    }
}

/// Standard errors on the natural scale; `None` for parameters held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdErrors {
    pub mu: f64,
    pub sigma: f64,
    pub lambda: Option<f64>,
    pub extra: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: BcsParams,
    pub std_errors: StdErrors,
    pub loglik: f64,
    pub aic: f64,
    pub free_parameters: usize,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// Set when the estimate sits on or runs toward the edge of the parameter space.
    pub boundary: bool,
}

/// Which natural parameters are free, in the order `μ, σ, λ, extra`.
#[derive(Debug, Clone, Copy)]
struct Layout {
    lambda: bool,
    extra: bool,
}

impl Layout {
    fn dim(&self) -> usize {
        2 + usize::from(self.lambda) + usize::from(self.extra)
    }

    /// Positions of the free coordinates inside the natural `(μ, σ, λ, extra)` vector.
    fn natural_indices(&self) -> Vec<usize> {
        let mut v = vec![0, 1];
        if self.lambda {
            v.push(2);
        }
        if self.extra {
            v.push(3);
        }
        v
    }

    fn to_theta(&self, p: &BcsParams) -> Vec<f64> {
        let mut t = vec![p.mu.ln(), p.sigma.ln()];
        if self.lambda {
            t.push(p.lambda);
        }
        if self.extra {
            t.push(p.family.extra().unwrap_or(1.0).ln());
        }
        t
    }

    fn from_theta(&self, theta: &[f64], base: &BcsParams) -> BcsParams {
        let mut p = BcsParams {
            mu: theta[0].exp(),
            sigma: theta[1].exp(),
            ..*base
        };
        let mut k = 2;
        if self.lambda {
            p.lambda = theta[k];
            k += 1;
        }
        if self.extra {
            p.family = p.family.with_extra(theta[k].exp());
        }
        p
    }

    /// `dθ_nat/dθ` for each free coordinate; log-scale coordinates map through `exp`.
    fn jacobian(&self, p: &BcsParams) -> Vec<f64> {
        let mut j = vec![p.mu, p.sigma];
        if self.lambda {
            j.push(1.0);
        }
        if self.extra {
            j.push(p.family.extra().unwrap_or(1.0));
        }
        j
    }
}

struct Problem<'a> {
    ctx: &'a LikelihoodContext,
    layout: Layout,
    base: BcsParams,
    mode: DerivativeMode,
}

const FD_GRADIENT_STEP: f64 = 1e-3;
const FD_HESSIAN_STEP: f64 = 1e-4;

impl Problem<'_> {
    fn params(&self, theta: &[f64]) -> BcsParams {
        self.layout.from_theta(theta, &self.base)
    }

    /// Snaps λ onto zero inside the seam.
    fn clamp(&self, theta: &mut [f64]) {
        if self.layout.lambda && theta[2].abs() < LAMBDA_SEAM {
            theta[2] = 0.0;
        }
    }

    /// Negative log-likelihood; `+∞` outside the valid region.
    fn objective(&self, theta: &[f64]) -> f64 {
        if theta.iter().any(|t| !t.is_finite()) {
            return f64::INFINITY;
        }
        let p = self.params(theta);
        match loglik(self.ctx, &p) {
            Ok(v) if v.is_finite() => -v,
            _ => f64::INFINITY,
        }
    }

    fn full_ctx(&self) -> LikelihoodContext {
        LikelihoodContext {
            fit_extra: self.layout.extra,
            ..self.ctx.clone()
        }
    }

    /// Gradient of the log-likelihood in θ.
    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        match self.mode {
            DerivativeMode::Analytic => {
                let p = self.params(theta);
                let g = score(&self.full_ctx(), &p)?;
                let jac = self.layout.jacobian(&p);
                Ok(self
                    .layout
                    .natural_indices()
                    .iter()
                    .zip(&jac)
                    .map(|(&i, &j)| g[i] * j)
                    .collect())
            }
            DerivativeMode::Numeric => self.numeric_gradient(theta),
        }
    }

    /// Five-point central stencil, so truncation error stays below the tolerance at a step
    /// large enough to keep log-likelihood roundoff out of the gradient.
    fn numeric_gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let h = FD_GRADIENT_STEP;
        let mut g = Vec::with_capacity(theta.len());
        for i in 0..theta.len() {
            let at = |k: f64| {
                let mut t = theta.to_vec();
                t[i] += k * h;
                self.objective(&t)
            };
            let f = [at(2.0), at(1.0), at(-1.0), at(-2.0)];
            if f.iter().any(|v| !v.is_finite()) {
                return Err(BcsError::Evaluation("log-likelihood not finite near estimate".into()));
            }
            g.push(-(-f[0] + 8.0 * f[1] - 8.0 * f[2] + f[3]) / (12.0 * h));
        }
        Ok(g)
    }

    /// Hessian of the log-likelihood in θ.
    fn hessian(&self, theta: &[f64]) -> Result<Matrix> {
        let dim = theta.len();
        match self.mode {
            DerivativeMode::Analytic => {
                let p = self.params(theta);
                let ctx = self.full_ctx();
                let h = hessian(&ctx, &p)?;
                let g = score(&ctx, &p)?;
                let idx = self.layout.natural_indices();
                let jac = self.layout.jacobian(&p);
                let log_scale: Vec<bool> = idx.iter().map(|&i| i != 2).collect();
                let mut out = vec![vec![0.0; dim]; dim];
                for a in 0..dim {
                    for b in 0..dim {
                        out[a][b] = jac[a] * jac[b] * h[idx[a]][idx[b]];
                    }
                    if log_scale[a] {
                        out[a][a] += jac[a] * g[idx[a]];
                    }
                }
                Ok(out)
            }
            DerivativeMode::Numeric => {
                let mut out = vec![vec![0.0; dim]; dim];
                for j in 0..dim {
                    let mut up = theta.to_vec();
                    let mut dn = theta.to_vec();
                    up[j] += FD_HESSIAN_STEP;
                    dn[j] -= FD_HESSIAN_STEP;
                    let gu = self.numeric_gradient(&up)?;
                    let gd = self.numeric_gradient(&dn)?;
                    for i in 0..dim {
                        out[i][j] = (gu[i] - gd[i]) / (2.0 * FD_HESSIAN_STEP);
                    }
                }
                for i in 0..dim {
                    for j in 0..i {
                        let m = 0.5 * (out[i][j] + out[j][i]);
                        out[i][j] = m;
                        out[j][i] = m;
                    }
                }
                Ok(out)
            }
        }
    }

    /// Backtracking line search on the objective along `dir`; returns the accepted point.
    fn line_search(
        &self,
        theta: &[f64],
        f0: f64,
        grad_f: &[f64],
        dir: &[f64],
    ) -> Option<(Vec<f64>, f64)> {
        let slope = dot(grad_f, dir);
        if !(slope < 0.0) {
            return None;
        }
        let longest = dir.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let mut step = if longest > 2.0 { 2.0 / longest } else { 1.0 };
        for _ in 0..60 {
            let mut trial: Vec<f64> = theta.iter().zip(dir).map(|(t, d)| t + step * d).collect();
            self.clamp(&mut trial);
            let f = self.objective(&trial);
            if f.is_finite() && f < f0 && f <= f0 + 1e-4 * step * slope {
                return Some((trial, f));
            }
            step *= 0.5;
        }
        None
    }
}

fn type7_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn initial_extra(family: &DensityFamily) -> f64 {
    match family {
        DensityFamily::StudentT { .. } => 10.0,
        DensityFamily::PowerExponential { .. } => 2.0,
        DensityFamily::Slash { .. } => 2.0,
        _ => 1.0,
    }
}

const LAMBDA_GRID: [f64; 6] = [-1.0, -0.5, 0.0, 0.5, 1.0, 2.0];

/// Scale matching the interquartile range of the transformed data.
fn matched_sigma(sorted: &[f64], median: f64, lambda: f64, s75: f64) -> f64 {
    let w = |y: f64| {
        let l = (y / median).ln();
        if lambda == 0.0 {
            l
        } else {
            (lambda * l).exp_m1() / lambda
        }
    };
    (w(type7_quantile(sorted, 0.75)) - w(type7_quantile(sorted, 0.25))) / (2.0 * s75)
}

/// Default starting point: μ at the sample median, σ matched to the
/// interquartile range, and λ the best of a coarse grid unless it is fixed.
pub fn initial_params(ctx: &LikelihoodContext) -> Result<BcsParams> {
    let mut sorted = ctx.data.clone();
    sorted.sort_by(f64::total_cmp);
    let median = type7_quantile(&sorted, 0.5);
    let family = if ctx.has_extra() {
        ctx.family.with_extra(initial_extra(&ctx.family))
    } else {
        ctx.family
    };
    let s75 = symmetric_quantile(&family, 0.75)?;
    let candidate = |lambda: f64| BcsParams::new(median, matched_sigma(&sorted, median, lambda, s75), lambda, family);
    if let Some(lambda) = ctx.fixed_lambda {
        return candidate(lambda);
    }
    let mut best: Option<(f64, BcsParams)> = None;
    for lambda in LAMBDA_GRID {
        let Ok(p) = candidate(lambda) else { continue };
        let ll = loglik(ctx, &p).unwrap_or(f64::NEG_INFINITY);
        if ll.is_finite() && best.as_ref().is_none_or(|(b, _)| ll > *b) {
            best = Some((ll, p));
        }
    }
    match best {
        Some((_, p)) => Ok(p),
        None => candidate(1.0),
    }
}

/// Beyond this `σ|λ|` the truncation point `1/(σ|λ|)` is near the centre,
/// where the likelihood may keep rising as `μ` and `σ` diverge together.
const RIDGE_SIGMA_LAMBDA: f64 = 20.0;

/// Past this `σ|λ|` the fitted law is indistinguishable from its half-law limit
/// and the likelihood is flat along the ridge to working precision.
const DIVERGED_SIGMA_LAMBDA: f64 = 1e3;

/// True when the likelihood does not drop along the ray that scales `σ` by 10
/// and moves `μ` so that `μ^{−λ}/σ` stays fixed. The supremum then lies at
/// infinity and no maximum exists.
fn on_divergent_ridge(problem: &Problem<'_>, theta: &[f64], f: f64, p: &BcsParams) -> bool {
    let spread = p.sigma * p.lambda.abs();
    if !problem.layout.lambda || p.lambda == 0.0 || spread <= RIDGE_SIGMA_LAMBDA {
        return false;
    }
    if spread > DIVERGED_SIGMA_LAMBDA {
        return true;
    }
    let step = 10f64.ln();
    let mut ray = theta.to_vec();
    ray[1] += step;
    ray[0] -= step / p.lambda;
    problem.objective(&ray) <= f + 1e-9 * f.abs().max(1.0)
}

fn failed_result(ctx: &LikelihoodContext, p: BcsParams, iterations: usize) -> FitResult {
    let k = ctx.free_parameters();
    let ll = loglik(ctx, &p).unwrap_or(f64::NEG_INFINITY);
    FitResult {
        params: p,
        std_errors: StdErrors {
            mu: f64::NAN,
            sigma: f64::NAN,
            lambda: ctx.fixed_lambda.is_none().then_some(f64::NAN),
            extra: ctx.has_extra().then_some(f64::NAN),
        },
        loglik: ll,
        aic: -2.0 * ll + 2.0 * k as f64,
        free_parameters: k,
        iterations,
        converged: false,
        gradient_norm: f64::NAN,
        boundary: true,
    }
}

/// Maximum-likelihood fit with default options.
pub fn fit(ctx: &LikelihoodContext, init: Option<BcsParams>) -> Result<FitResult> {
    fit_with(ctx, init, &FitOptions::default())
}

pub fn fit_with(
    ctx: &LikelihoodContext,
    init: Option<BcsParams>,
    options: &FitOptions,
) -> Result<FitResult> {
    let layout = Layout {
        lambda: ctx.fixed_lambda.is_none(),
        extra: ctx.has_extra(),
    };
    let start = match init {
        Some(mut p) => {
            if let Some(l) = ctx.fixed_lambda {
                p.lambda = l;
            }
            if !ctx.has_extra() && ctx.family.extra().is_some() {
                p.family = ctx.family;
            }
            p
        }
        None => match initial_params(ctx) {
            Ok(p) => p,
            Err(_) => {
                let fallback = BcsParams {
                    mu: ctx.data[0],
                    sigma: f64::MIN_POSITIVE,
                    lambda: ctx.fixed_lambda.unwrap_or(1.0),
                    family: ctx.family,
                };
                return Ok(failed_result(ctx, fallback, 0));
            }
        },
    };
    if start.validate().is_err() {
        return Ok(failed_result(ctx, start, 0));
    }
    let problem = Problem {
        ctx,
        layout,
        base: start,
        mode: options.derivatives,
    };
    let mut theta = layout.to_theta(&start);
    problem.clamp(&mut theta);
    let mut f = problem.objective(&theta);
    if !f.is_finite() {
        return Ok(failed_result(ctx, start, 0));
    }
    let dim = layout.dim();
    let mut iterations = 0;
    // The objective is −ℓ, so its gradient is −(score in θ).
    let neg = |g: Vec<f64>| g.into_iter().map(|v| -v).collect::<Vec<f64>>();
    let mut grad = match problem.gradient(&theta) {
        Ok(g) => neg(g),
        Err(_) => return Ok(failed_result(ctx, start, 0)),
    };
    let mut inv_h = crate::numeric::linalg::identity(dim);
    let mut first = true;
    let mut restarted = false;
    while iterations < options.max_iterations && norm2(&grad) >= options.tolerance {
        iterations += 1;
        let dir: Vec<f64> = inv_h.iter().map(|row| -dot(row, &grad)).collect();
        let (dir, reset) = if dot(&dir, &grad) < 0.0 {
            (dir, false)
        } else {
            (grad.iter().map(|g| -g).collect(), true)
        };
        let Some((next, f_next)) = problem.line_search(&theta, f, &grad, &dir) else {
            if reset || restarted {
                break;
            }
            inv_h = crate::numeric::linalg::identity(dim);
            restarted = true;
            continue;
        };
        restarted = false;
        let g_next = match problem.gradient(&next) {
            Ok(g) => neg(g),
            Err(_) => break,
        };
        let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_next.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm2(&s) * norm2(&y) {
            if first {
                let scale = sy / dot(&y, &y);
                inv_h = crate::numeric::linalg::identity(dim);
                for (i, row) in inv_h.iter_mut().enumerate() {
                    row[i] = scale;
                }
                first = false;
            }
            let rho = 1.0 / sy;
            let hy: Vec<f64> = inv_h.iter().map(|row| dot(row, &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..dim {
                for j in 0..dim {
                    inv_h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        theta = next;
        f = f_next;
        grad = g_next;
    }

    // Newton refinement from the quasi-Newton point.
    for _ in 0..50 {
        if norm2(&grad) < options.tolerance || iterations >= options.max_iterations + 50 {
            break;
        }
        let Ok(h) = problem.hessian(&theta) else { break };
        let neg_h: Matrix = h.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        let Some(l) = cholesky(&neg_h) else { break };
        let minus_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
        let dir = cholesky_solve(&l, &minus_grad);
        iterations += 1;
        // Near the optimum the decrease in f drops below its rounding error, so a
        // full step is taken whenever it shrinks the gradient without raising f.
        let mut full: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + d).collect();
        problem.clamp(&mut full);
        let f_full = problem.objective(&full);
        let full_ok = f_full <= f + 1e-10 * f.abs().max(1.0);
        let g_full = if full_ok { problem.gradient(&full).ok().map(neg) } else { None };
        let (next, f_next, g_next) = match g_full {
            Some(g) if norm2(&g) < norm2(&grad) => (full, f_full, g),
            _ => {
                let Some((next, f_next)) = problem.line_search(&theta, f, &grad, &dir) else {
                    break;
                };
                let Ok(g) = problem.gradient(&next) else { break };
                (next, f_next, neg(g))
            }
        };
        theta = next;
        f = f_next;
        grad = g_next;
    }

    let gradient_norm = norm2(&grad);
    let params = problem.params(&theta);
    let ridge = on_divergent_ridge(&problem, &theta, f, &params);
    let converged = gradient_norm < options.tolerance && !ridge;
    let k = ctx.free_parameters();
    let ll = -f;
    let boundary = ridge
        || params.sigma < 1e-6
        || params
            .family
            .extra()
            .is_some_and(|v| layout.extra && !(1e-3..=1e4).contains(&v));
    let std_errors = standard_errors(&problem, &theta, &params, converged)?;
    Ok(FitResult {
        params,
        std_errors,
        loglik: ll,
        aic: -2.0 * ll + 2.0 * k as f64,
        free_parameters: k,
        iterations,
        converged,
        gradient_norm,
        boundary,
    })
}

/// Delta-method standard errors from the inverse observed information in θ.
fn standard_errors(
    problem: &Problem<'_>,
    theta: &[f64],
    p: &BcsParams,
    converged: bool,
) -> Result<StdErrors> {
    let layout = problem.layout;
    let nan = StdErrors {
        mu: f64::NAN,
        sigma: f64::NAN,
        lambda: layout.lambda.then_some(f64::NAN),
        extra: layout.extra.then_some(f64::NAN),
    };
    let info: Matrix = match problem.hessian(theta) {
        Ok(h) => h.iter().map(|r| r.iter().map(|v| -v).collect()).collect(),
        Err(e) if converged => return Err(e),
        Err(_) => return Ok(nan),
    };
    let cov = match invert(&info) {
        Ok(c) => c,
        Err(e) if converged => return Err(e),
        Err(_) => return Ok(nan),
    };
    let jac = layout.jacobian(p);
    let se: Vec<f64> = (0..layout.dim())
        .map(|i| {
            let v = cov[i][i];
            if v >= 0.0 {
                jac[i] * v.sqrt()
            } else {
                f64::NAN
            }
        })
        .collect();
    let mut k = 2;
    let lambda = layout.lambda.then(|| {
        k += 1;
        se[k - 1]
    });
    let extra = layout.extra.then(|| se[k]);
    Ok(StdErrors {
        mu: se[0],
        sigma: se[1],
        lambda,
        extra,
    })
}
