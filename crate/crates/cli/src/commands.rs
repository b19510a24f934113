use crate::error::CliError;
use crate::ingest::{describe, read_column, Dataset, Descriptive};
use crate::output::{cell, emit, qq_csv, to_json, SCHEMA_VERSION};
use bcs_core::dist::sample;
use bcs_core::estimation::{fit_with, DerivativeMode, FitOptions, FitResult, LikelihoodContext};
use bcs_core::inference::{gof_report, qq_data, GofReport};
use bcs_core::numeric::RngStream;
use bcs_core::simulation::{run_type1_study, with_workers, ModeSelection, SimulationPlan, SimulationResult};
use bcs_core::tail::{empirical_tail_slope, tail_form, TailReport, DEFAULT_PROBE};
use bcs_core::{BcsParams, DensityFamily, FamilyKind};
use clap::{Args, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

pub const SEED_ENV: &str = "BCS_SEED";

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one family to a data column and report goodness of fit.
    Fit(FitArgs),
    /// Fit several families to the same column and compare AIC and AD statistics.
    Compare(CompareArgs),
    /// Draw a sample from a model.
    Sample(SampleArgs),
    /// Tail index and asymptotic tail form of a model.
    Tail(TailArgs),
    /// Type-I error study of the likelihood-ratio test of lambda = 0.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    /// Generator family (normal, double-exponential, power-exponential, cauchy, t,
    /// logistic-i, logistic-ii, canonical-slash, slash).
    #[arg(long, default_value = "normal")]
    pub family: String,
    /// Degrees of freedom (t) or shape (power-exponential).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Slash shape parameter.
    #[arg(long)]
    pub q: Option<f64>,
}

impl FamilyArgs {
    fn kind(&self) -> Result<FamilyKind, CliError> {
        self.family.parse::<FamilyKind>().map_err(CliError::from)
    }

    fn extra(&self, kind: FamilyKind) -> Result<Option<f64>, CliError> {
        match (kind, self.tau, self.q) {
            (_, Some(_), Some(_)) => Err(CliError::Usage("give at most one of --tau and --q".into())),
            (FamilyKind::Slash, Some(_), None) => Err(CliError::Usage("slash takes --q".into())),
            (FamilyKind::PowerExponential | FamilyKind::StudentT, None, Some(_)) => {
                Err(CliError::Usage(format!("{kind} takes --tau")))
            }
            (k, t, q) if !k.has_extra() && (t.is_some() || q.is_some()) => {
                Err(CliError::Usage(format!("{k} takes no extra parameter")))
            }
            (_, t, q) => Ok(t.or(q)),
        }
    }

    /// Family with the given extra parameter; `fallback` fills it when absent.
    fn resolve(&self, fallback: Option<f64>) -> Result<(DensityFamily, Vec<String>), CliError> {
        let kind = self.kind()?;
        let extra = self.extra(kind)?;
        let extra = if kind.has_extra() {
            Some(extra.or(fallback).ok_or_else(|| {
                CliError::Usage(format!("{kind} needs {}", if kind == FamilyKind::Slash { "--q" } else { "--tau" }))
            })?)
        } else {
            None
        };
        let family = DensityFamily::new(kind, extra)?;
        Ok((family, notes_for(&family)))
    }
}

fn notes_for(family: &DensityFamily) -> Vec<String> {
    match *family {
        DensityFamily::PowerExponential { tau } if tau == 2.0 => {
            vec!["power-exponential with tau = 2 coincides with the normal family".into()]
        }
        DensityFamily::PowerExponential { tau } if tau == 1.0 => {
            vec!["power-exponential with tau = 1 coincides with the double-exponential family".into()]
        }
        DensityFamily::Slash { q } if q == 1.0 => {
            vec!["slash with q = 1 coincides with the canonical slash family".into()]
        }
        _ => Vec::new(),
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Column holding the observations.
    #[arg(long)]
    pub column: String,
    /// Skip rows whose value is missing, non-numeric or not positive.
    #[arg(long)]
    pub drop_nonpositive: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DerivArg {
    Analytic,
    Numeric,
}

impl From<DerivArg> for DerivativeMode {
    fn from(d: DerivArg) -> Self {
        match d {
            DerivArg::Analytic => DerivativeMode::Analytic,
            DerivArg::Numeric => DerivativeMode::Numeric,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Hold lambda at this value (0 gives a log-symmetric fit).
    #[arg(long, allow_negative_numbers = true)]
    pub fix_lambda: Option<f64>,
    /// Hold tau or q at the value given by --tau / --q.
    #[arg(long)]
    pub no_extra: bool,
    #[arg(long, value_enum, default_value = "analytic")]
    pub derivatives: DerivArg,
    /// Write QQ pairs of the quantile residuals to this CSV file.
    #[arg(long)]
    pub qq_out: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct DatasetInfo<'a> {
    name: &'a str,
    source_path: &'a str,
    column: &'a str,
    n: usize,
    rejected_rows: usize,
}

impl<'a> From<&'a Dataset> for DatasetInfo<'a> {
    fn from(d: &'a Dataset) -> Self {
        Self {
            name: &d.name,
            source_path: &d.source_path,
            column: &d.column,
            n: d.values.len(),
            rejected_rows: d.rejected_rows,
        }
    }
}

#[derive(Debug, Serialize)]
struct FitReportDocument<'a> {
    schema_version: u32,
    dataset: DatasetInfo<'a>,
    family: FamilyKind,
    /// Value at which τ or q was held, when it was not estimated.
    extra_held: Option<f64>,
    notes: Vec<String>,
    fit: FitResult,
    gof: Option<GofReport>,
    descriptive: Descriptive,
}

struct FitOutcome {
    family: DensityFamily,
    notes: Vec<String>,
    fit: FitResult,
    gof: Option<GofReport>,
}

fn fit_family(
    data: &[f64],
    family_args: &FamilyArgs,
    fix_lambda: Option<f64>,
    no_extra: bool,
    mode: DerivativeMode,
) -> Result<FitOutcome, CliError> {
    let kind = family_args.kind()?;
    if no_extra && kind.has_extra() && family_args.extra(kind)?.is_none() {
        return Err(CliError::Usage("--no-extra needs the value to hold via --tau or --q".into()));
    }
    let fallback = match kind {
        FamilyKind::StudentT => Some(10.0),
        FamilyKind::PowerExponential | FamilyKind::Slash => Some(2.0),
        _ => None,
    };
    let (family, notes) = family_args.resolve(fallback)?;
    let ctx = LikelihoodContext::new(data.to_vec(), family)?
        .with_fixed_lambda(fix_lambda)
        .with_fit_extra(!no_extra);
    let init = match bcs_core::estimation::initial_params(&ctx) {
        Ok(mut p) => {
            p.family = family;
            Some(p)
        }
        Err(_) => None,
    };
    let options = FitOptions {
        derivatives: mode,
        ..FitOptions::default()
    };
    let fit = fit_with(&ctx, init, &options)?;
    let gof = if fit.converged { gof_report(data, &fit).ok() } else { None };
    Ok(FitOutcome {
        family,
        notes,
        fit,
        gof,
    })
}

pub fn cmd_fit(args: &FitArgs) -> Result<i32, CliError> {
    let ds = read_column(&args.data.input, &args.data.column, args.data.drop_nonpositive)?;
    let out = fit_family(
        &ds.values,
        &args.family,
        args.fix_lambda,
        args.no_extra,
        args.derivatives.into(),
    )?;
    if let (Some(path), Some(gof)) = (&args.qq_out, &out.gof) {
        std::fs::write(path, qq_csv(&qq_data(&gof.quantile_residuals)?))?;
    }
    let converged = out.fit.converged;
    let doc = FitReportDocument {
        schema_version: SCHEMA_VERSION,
        dataset: (&ds).into(),
        family: out.family.kind(),
        extra_held: if args.no_extra { out.family.extra() } else { None },
        notes: out.notes,
        fit: out.fit,
        gof: out.gof,
        descriptive: describe(&ds.values),
    };
    emit(&to_json(&doc)?, args.output.as_deref())?;
    if converged {
        Ok(0)
    } else {
        eprintln!("{}", CliError::Numeric("optimizer did not converge".into()).to_json());
        Ok(4)
    }
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated families; an extra parameter may follow a colon, e.g. t:5,pe:1.5.
    /// Extra parameters are estimated unless --no-extra is given.
    #[arg(long, value_delimiter = ',', required = true)]
    pub families: Vec<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub fix_lambda: Option<f64>,
    #[arg(long)]
    pub no_extra: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct ComparisonRow {
    family: String,
    converged: bool,
    free_parameters: usize,
    loglik: Option<f64>,
    aic: Option<f64>,
    ad: Option<f64>,
    adr: Option<f64>,
    ad2r: Option<f64>,
    error: Option<String>,
    fit: Option<FitResult>,
}

#[derive(Debug, Default, Serialize)]
struct Best {
    aic: Option<String>,
    ad: Option<String>,
    adr: Option<String>,
    ad2r: Option<String>,
}

#[derive(Debug, Serialize)]
struct ComparisonDocument<'a> {
    schema_version: u32,
    dataset: DatasetInfo<'a>,
    rows: Vec<ComparisonRow>,
    best: Best,
}

fn family_spec(spec: &str) -> Result<FamilyArgs, CliError> {
    let (name, extra) = match spec.split_once(':') {
        Some((n, v)) => {
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad extra parameter in '{spec}'")))?;
            (n.trim(), Some(v))
        }
        None => (spec.trim(), None),
    };
    let kind: FamilyKind = name.parse()?;
    let (tau, q) = match kind {
        FamilyKind::Slash => (None, extra),
        _ => (extra, None),
    };
    Ok(FamilyArgs {
        family: name.to_string(),
        tau,
        q,
    })
}

fn argmin(rows: &[ComparisonRow], key: impl Fn(&ComparisonRow) -> Option<f64>) -> Option<String> {
    rows.iter()
        .filter_map(|r| key(r).filter(|v| v.is_finite()).map(|v| (v, &r.family)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, f)| f.clone())
}

pub fn cmd_compare(args: &CompareArgs) -> Result<i32, CliError> {
    if args.families.len() < 2 {
        return Err(CliError::Usage("compare needs at least two families".into()));
    }
    let specs = args
        .families
        .iter()
        .map(|s| family_spec(s))
        .collect::<Result<Vec<_>, _>>()?;
    let ds = read_column(&args.data.input, &args.data.column, args.data.drop_nonpositive)?;
    let rows: Vec<ComparisonRow> = specs
        .iter()
        .zip(&args.families)
        .map(|(spec, label)| {
            match fit_family(&ds.values, spec, args.fix_lambda, args.no_extra, DerivativeMode::Analytic) {
                Ok(out) if out.fit.converged => ComparisonRow {
                    family: label.clone(),
                    converged: true,
                    free_parameters: out.fit.free_parameters,
                    loglik: Some(out.fit.loglik),
                    aic: Some(out.fit.aic),
                    ad: out.gof.as_ref().map(|g| g.ad),
                    adr: out.gof.as_ref().map(|g| g.adr),
                    ad2r: out.gof.as_ref().map(|g| g.ad2r),
                    error: None,
                    fit: Some(out.fit),
                },
                Ok(out) => ComparisonRow {
                    family: label.clone(),
                    converged: false,
                    free_parameters: out.fit.free_parameters,
                    loglik: None,
                    aic: None,
                    ad: None,
                    adr: None,
                    ad2r: None,
                    error: Some("optimizer did not converge".into()),
                    fit: Some(out.fit),
                },
                Err(e) => ComparisonRow {
                    family: label.clone(),
                    converged: false,
                    free_parameters: 0,
                    loglik: None,
                    aic: None,
                    ad: None,
                    adr: None,
                    ad2r: None,
                    error: Some(e.to_string()),
                    fit: None,
                },
            }
        })
        .collect();
    let best = Best {
        aic: argmin(&rows, |r| r.aic),
        ad: argmin(&rows, |r| r.ad),
        adr: argmin(&rows, |r| r.adr),
        ad2r: argmin(&rows, |r| r.ad2r),
    };
    let table = comparison_table(&rows, &best);
    let all_failed = rows.iter().all(|r| !r.converged);
    let doc = ComparisonDocument {
        schema_version: SCHEMA_VERSION,
        dataset: (&ds).into(),
        rows,
        best,
    };
    let json = to_json(&doc)?;
    match &args.output {
        Some(path) => {
            emit(&json, Some(path))?;
            print!("{table}");
        }
        None => {
            emit(&json, None)?;
            eprint!("{table}");
        }
    }
    if all_failed {
        eprintln!("{}", CliError::Numeric("no family could be fitted".into()).to_json());
        Ok(4)
    } else {
        Ok(0)
    }
}

fn comparison_table(rows: &[ComparisonRow], best: &Best) -> String {
    let is = |b: &Option<String>, f: &str| b.as_deref() == Some(f);
    let width = rows.iter().map(|r| r.family.len()).max().unwrap_or(6).max(6);
    let mut s = format!(
        "{:<width$}  {:>12}  {:>9}  {:>9}  {:>9}\n",
        "family", "AIC", "AD", "ADR", "AD2R"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<width$}  {:>12}  {:>9}  {:>9}  {:>9}\n",
            r.family,
            cell(r.aic, is(&best.aic, &r.family)),
            cell(r.ad, is(&best.ad, &r.family)),
            cell(r.adr, is(&best.adr, &r.family)),
            cell(r.ad2r, is(&best.ad2r, &r.family)),
        ));
    }
    s
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lambda: f64,
}

impl ModelArgs {
    fn params(&self) -> Result<(BcsParams, Vec<String>), CliError> {
        let (family, notes) = self.family.resolve(None)?;
        Ok((BcsParams::new(self.mu, self.sigma, self.lambda, family)?, notes))
    }
}

fn seed_or_env(seed: Option<u64>) -> Result<u64, CliError> {
    match seed {
        Some(s) => Ok(s),
        None => match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer"))),
            Err(_) => Ok(0),
        },
    }
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(short = 'n', long)]
    pub n: usize,
    /// Defaults to $BCS_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn describe_params(p: &BcsParams) -> String {
    let extra = match p.family {
        DensityFamily::Slash { q } => format!(" q={q:?}"),
        f => f.extra().map(|t| format!(" tau={t:?}")).unwrap_or_default(),
    };
    format!(
        "family={}{extra} mu={:?} sigma={:?} lambda={:?}",
        p.family.kind(),
        p.mu,
        p.sigma,
        p.lambda
    )
}

pub fn cmd_sample(args: &SampleArgs) -> Result<i32, CliError> {
    let (p, _) = args.model.params()?;
    let seed = seed_or_env(args.seed)?;
    let draws = sample(args.n, &p, &mut RngStream::new(seed, 0))?;
    let mut s = format!("# {} seed={seed} n={}\ny\n", describe_params(&p), args.n);
    for y in draws {
        s.push_str(&format!("{y:?}\n"));
    }
    emit(&s, args.output.as_deref())?;
    Ok(0)
}

#[derive(Debug, Args)]
pub struct TailArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Also estimate the log-survival slope over the 0.99 to 0.9999 quantile range.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Serialize)]
struct TailDocument {
    schema_version: u32,
    params: BcsParams,
    notes: Vec<String>,
    /// The tail index as text, so that an infinite index survives JSON.
    tail_index_text: String,
    report: TailReport,
    verification: Option<TailVerification>,
}

#[derive(Debug, Serialize)]
struct TailVerification {
    probe: (f64, f64),
    empirical_slope: f64,
    /// `−1/ξ`; absent when ξ is 0 or infinite.
    expected_slope: Option<f64>,
}

pub fn cmd_tail(args: &TailArgs) -> Result<i32, CliError> {
    let (p, notes) = args.model.params()?;
    let report = tail_form(&p)?;
    let verification = if args.verify {
        let xi = report.tail_index;
        Some(TailVerification {
            probe: DEFAULT_PROBE,
            empirical_slope: empirical_tail_slope(&p, DEFAULT_PROBE)?,
            expected_slope: (xi > 0.0 && xi.is_finite()).then(|| -1.0 / xi),
        })
    } else {
        None
    };
    let doc = TailDocument {
        schema_version: SCHEMA_VERSION,
        params: p,
        notes,
        tail_index_text: format!("{:?}", report.tail_index),
        report,
        verification,
    };
    emit(&to_json(&doc)?, None)?;
    Ok(0)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Analytic,
    Numeric,
    Both,
}

impl From<ModeArg> for ModeSelection {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Analytic => ModeSelection::Analytic,
            ModeArg::Numeric => ModeSelection::Numeric,
            ModeArg::Both => ModeSelection::Both,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON plan file; when given, the inline plan flags are ignored.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',', default_value = "100")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,
    /// Defaults to $BCS_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "both")]
    pub mode: ModeArg,
    /// Estimate tau or q in each replicate instead of holding it at the truth.
    #[arg(long)]
    pub estimate_extra: bool,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct SimulationDocument {
    schema_version: u32,
    result: SimulationResult,
}

fn plan_problems(plan: &SimulationPlan) -> Vec<String> {
    let mut v = Vec::new();
    if let Err(e) = plan.true_params.validate() {
        v.push(e.to_string());
    }
    if plan.true_params.lambda != 0.0 {
        v.push(format!("lambda must be 0 under the null, got {}", plan.true_params.lambda));
    }
    if plan.replicates == 0 {
        v.push("replicates must be >= 1".into());
    }
    if plan.sample_sizes.is_empty() {
        v.push("no sample sizes given".into());
    }
    for n in plan.sample_sizes.iter().filter(|&&n| n < 10) {
        v.push(format!("sample size {n} is below 10"));
    }
    if !(plan.nominal_level > 0.0 && plan.nominal_level < 1.0) {
        v.push(format!("nominal level must lie in (0, 1), got {}", plan.nominal_level));
    }
    v
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<i32, CliError> {
    let plan = match &args.plan {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Ingestion(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<SimulationPlan>(&text)
                .map_err(|e| CliError::Ingestion(format!("invalid plan: {e}")))?
        }
        None => {
            let (family, _) = args.family.resolve(None)?;
            SimulationPlan {
                true_params: BcsParams {
                    mu: args.mu,
                    sigma: args.sigma,
                    lambda: 0.0,
                    family,
                },
                sample_sizes: args.sizes.clone(),
                replicates: args.replicates,
                nominal_level: args.level,
                seed: seed_or_env(args.seed)?,
                derivative_mode: args.mode.into(),
                estimate_extra: args.estimate_extra,
            }
        }
    };
    let problems = plan_problems(&plan);
    if !problems.is_empty() {
        return Err(CliError::Usage(format!("invalid plan: {}", problems.join("; "))));
    }
    let result = match args.workers {
        Some(w) => with_workers(w, || run_type1_study(&plan))??,
        None => run_type1_study(&plan)?,
    };
    let doc = SimulationDocument {
        schema_version: SCHEMA_VERSION,
        result,
    };
    emit(&to_json(&doc)?, args.output.as_deref())?;
    Ok(0)
}
