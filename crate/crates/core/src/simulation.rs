//! Monte Carlo harness: LR-test size under λ = 0 and parameter recovery.
//!
//! Replicate `i` always draws from stream `(seed, i)`, so results do not
//! depend on how replicates are spread across threads.

use crate::dist::{sample, BcsParams};
use crate::error::{BcsError, Result};
use crate::estimation::{fit_with, DerivativeMode, FitOptions, LikelihoodContext};
use crate::inference::{lr_test_from_fits, nested_fits};
use crate::numeric::RngStream;
use crate::symmetric::DensityFamily;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSelection {
    Analytic,
    Numeric,
    Both,
}

impl ModeSelection {
    pub fn modes(self) -> Vec<DerivativeMode> {
        match self {
            ModeSelection::Analytic => vec![DerivativeMode::Analytic],
            ModeSelection::Numeric => vec![DerivativeMode::Numeric],
            ModeSelection::Both => vec![DerivativeMode::Analytic, DerivativeMode::Numeric],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationPlan {
    pub true_params: BcsParams,
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    pub nominal_level: f64,
    pub seed: u64,
    pub derivative_mode: ModeSelection,
    /// Estimate τ or q instead of holding it at the true value.
    #[serde(default)]
    pub estimate_extra: bool,
}

impl SimulationPlan {
    pub fn type1(true_params: BcsParams, sample_sizes: Vec<usize>, seed: u64) -> Self {
        Self {
            true_params,
            sample_sizes,
            replicates: 2000,
            nominal_level: 0.05,
            seed,
            derivative_mode: ModeSelection::Both,
            estimate_extra: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.true_params.validate()?;
        if self.replicates == 0 {
            return Err(BcsError::InvalidParameter("replicates must be >= 1".into()));
        }
        if let Some(n) = self.sample_sizes.iter().find(|&&n| n < 10) {
            return Err(BcsError::InvalidParameter(format!("sample size {n} is below 10")));
        }
        if self.sample_sizes.is_empty() {
            return Err(BcsError::InvalidParameter("no sample sizes given".into()));
        }
        if !(self.nominal_level > 0.0 && self.nominal_level < 1.0) {
            return Err(BcsError::InvalidParameter(format!(
                "nominal level must lie in (0, 1), got {}",
                self.nominal_level
            )));
        }
        Ok(())
    }
}

/// Outcome of one replicate; `None` when either fit failed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub n: usize,
    pub derivative_mode: DerivativeMode,
    pub replicates: usize,
    pub rejections: usize,
    pub rejection_rate: f64,
    pub failed_fits: usize,
    pub mc_std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub plan: SimulationPlan,
    pub cells: Vec<CellResult>,
    /// Per sample size, replicates where analytic and numeric decisions differ.
    pub mode_disagreements: Option<Vec<usize>>,
}

fn fit_options(mode: DerivativeMode) -> FitOptions {
    FitOptions {
        derivatives: mode,
        ..FitOptions::default()
    }
}

/// Runs replicate `index` of the type-I-error study at sample size `n`.
pub fn type1_replicate(
    plan: &SimulationPlan,
    n: usize,
    index: usize,
    mode: DerivativeMode,
) -> Option<ReplicateOutcome> {
    let mut rng = RngStream::new(plan.seed, index as u64);
    let data = sample(n, &plan.true_params, &mut rng).ok()?;
    let ctx = LikelihoodContext::new(data, plan.true_params.family)
        .ok()?
        .with_fit_extra(plan.estimate_extra);
    let (full, null) = nested_fits(&ctx, &fit_options(mode)).ok()?;
    let lr = lr_test_from_fits(&full, &null).ok()?;
    Some(ReplicateOutcome {
        statistic: lr.statistic,
        p_value: lr.p_value,
        reject: lr.p_value < plan.nominal_level,
    })
}

/// All replicate outcomes for one cell, in replicate order.
pub fn type1_outcomes(
    plan: &SimulationPlan,
    n: usize,
    mode: DerivativeMode,
) -> Vec<Option<ReplicateOutcome>> {
    (0..plan.replicates)
        .into_par_iter()
        .map(|i| type1_replicate(plan, n, i, mode))
        .collect()
}

fn summarize(n: usize, mode: DerivativeMode, outcomes: &[Option<ReplicateOutcome>]) -> CellResult {
    let done: Vec<&ReplicateOutcome> = outcomes.iter().flatten().collect();
    let r = done.len();
    let rejections = done.iter().filter(|o| o.reject).count();
    let rate = if r == 0 { f64::NAN } else { rejections as f64 / r as f64 };
    CellResult {
        n,
        derivative_mode: mode,
        replicates: r,
        rejections,
        rejection_rate: rate,
        failed_fits: outcomes.len() - r,
        mc_std_error: (rate * (1.0 - rate) / r as f64).sqrt(),
    }
}

/// Empirical size of the LR test of λ = 0 with data generated under the null.
pub fn run_type1_study(plan: &SimulationPlan) -> Result<SimulationResult> {
    plan.validate()?;
    if plan.true_params.lambda != 0.0 {
        return Err(BcsError::InvalidParameter(format!(
            "type-I study needs lambda = 0 in the true parameters, got {}",
            plan.true_params.lambda
        )));
    }
    let modes = plan.derivative_mode.modes();
    let mut cells = Vec::new();
    let mut disagreements = Vec::new();
    for &n in &plan.sample_sizes {
        let per_mode: Vec<Vec<Option<ReplicateOutcome>>> =
            modes.iter().map(|&m| type1_outcomes(plan, n, m)).collect();
        for (m, outcomes) in modes.iter().zip(&per_mode) {
            cells.push(summarize(n, *m, outcomes));
        }
        if per_mode.len() == 2 {
            let differ = per_mode[0]
                .iter()
                .zip(&per_mode[1])
                .filter(|(a, b)| a.map(|o| o.reject) != b.map(|o| o.reject))
                .count();
            disagreements.push(differ);
        }
    }
    Ok(SimulationResult {
        plan: plan.clone(),
        cells,
        mode_disagreements: (modes.len() == 2).then_some(disagreements),
    })
}

/// Runs `f` on a dedicated pool with `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| BcsError::Evaluation(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryPlan {
    pub true_params: BcsParams,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub estimate_extra: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterRecovery {
    pub name: String,
    pub truth: f64,
    pub mean_estimate: f64,
    pub empirical_sd: f64,
    pub mean_std_error: f64,
    /// Share of replicates whose 95% Wald interval covers the truth.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverySummary {
    pub plan: RecoveryPlan,
    pub converged: usize,
    pub failed_fits: usize,
    pub parameters: Vec<ParameterRecovery>,
}

/// Bias, spread and Wald coverage of the ML estimates over replicated samples.
pub fn run_recovery_study(plan: &RecoveryPlan) -> Result<RecoverySummary> {
    plan.true_params.validate()?;
    if plan.replicates == 0 || plan.n < 10 {
        return Err(BcsError::InvalidParameter(
            "recovery study needs replicates >= 1 and n >= 10".into(),
        ));
    }
    let truth = plan.true_params;
    let estimate_extra = plan.estimate_extra && truth.family.extra().is_some();
    let rows: Vec<Option<Vec<(f64, f64)>>> = (0..plan.replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(plan.seed, i as u64);
            let data = sample(plan.n, &truth, &mut rng).ok()?;
            let ctx = LikelihoodContext::new(data, truth.family)
                .ok()?
                .with_fit_extra(estimate_extra);
            let r = fit_with(&ctx, None, &FitOptions::default()).ok()?;
            if !r.converged {
                return None;
            }
            let se = r.std_errors;
            let mut row = vec![
                (r.params.mu, se.mu),
                (r.params.sigma, se.sigma),
                (r.params.lambda, se.lambda?),
            ];
            if estimate_extra {
                row.push((r.params.family.extra()?, se.extra?));
            }
            row.iter().all(|(e, s)| e.is_finite() && s.is_finite()).then_some(row)
        })
        .collect();
    let good: Vec<&Vec<(f64, f64)>> = rows.iter().flatten().collect();
    let mut names = vec!["mu", "sigma", "lambda"];
    let mut truths = vec![truth.mu, truth.sigma, truth.lambda];
    if estimate_extra {
        names.push(if matches!(truth.family, DensityFamily::Slash { .. }) { "q" } else { "tau" });
        truths.push(truth.family.extra().unwrap_or(f64::NAN));
    }
    let m = good.len() as f64;
    let parameters = names
        .iter()
        .zip(&truths)
        .enumerate()
        .map(|(k, (name, &t))| {
            let est: Vec<f64> = good.iter().map(|row| row[k].0).collect();
            let mean = est.iter().sum::<f64>() / m;
            let var = est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0);
            let covered = good
                .iter()
                .filter(|row| (row[k].0 - t).abs() <= 1.959_963_984_540_054 * row[k].1)
                .count();
            ParameterRecovery {
                name: (*name).to_string(),
                truth: t,
                mean_estimate: mean,
                empirical_sd: var.sqrt(),
                mean_std_error: good.iter().map(|row| row[k].1).sum::<f64>() / m,
                coverage: covered as f64 / m,
            }
        })
        .collect();
    Ok(RecoverySummary {
        plan: plan.clone(),
        converged: good.len(),
        failed_fits: rows.len() - good.len(),
        parameters,
    })
}
