//! Standard symmetric laws `S(0, 1; r)`.
//!
//! Each family is described by its density generating function `r(u)`,
//! `u = s²`, so that the density of the standard variable is `r(s²)`. The
//! module provides `r` with its first two log-derivatives, the cdf `R(s)`,
//! its inverse, and the weighting function `ϖ(z) = −2 r′(z²)/r(z²)`.

use crate::error::{BcsError, Result};
use crate::numeric::special::{
    ln_beta, ln_gamma, ln_scaled_lower_gamma, lower_incomplete_gamma, reg_incomplete_beta,
    reg_incomplete_gamma_upper, std_normal_quantile, std_normal_sf,
};
use crate::numeric::{find_root, gauss_legendre, integrate, QuadratureSpec};
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

/// Normalizing constant of the type I logistic generator, `1 / (√π η(−1/2))`
/// with `η` the Dirichlet eta function.
#[allow(clippy::excessive_precision)]
pub const LOGISTIC_I_CONSTANT: f64 = 1.484_300_026_811_558_2;

/// The nine density generating functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityFamily {
    Normal,
    DoubleExponential,
    PowerExponential { tau: f64 },
    Cauchy,
    StudentT { tau: f64 },
    LogisticI,
    LogisticII,
    CanonicalSlash,
    Slash { q: f64 },
}

/// Family tag without the shape parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Normal,
    DoubleExponential,
    PowerExponential,
    Cauchy,
    StudentT,
    LogisticI,
    LogisticII,
    CanonicalSlash,
    Slash,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 9] = [
        FamilyKind::Normal,
        FamilyKind::DoubleExponential,
        FamilyKind::PowerExponential,
        FamilyKind::Cauchy,
        FamilyKind::StudentT,
        FamilyKind::LogisticI,
        FamilyKind::LogisticII,
        FamilyKind::CanonicalSlash,
        FamilyKind::Slash,
    ];

    pub fn has_extra(self) -> bool {
        matches!(
            self,
            FamilyKind::PowerExponential | FamilyKind::StudentT | FamilyKind::Slash
        )
    }

    /// Short name used on the command line and in reports.
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Normal => "normal",
            FamilyKind::DoubleExponential => "double-exponential",
            FamilyKind::PowerExponential => "power-exponential",
            FamilyKind::Cauchy => "cauchy",
            FamilyKind::StudentT => "t",
            FamilyKind::LogisticI => "logistic-i",
            FamilyKind::LogisticII => "logistic-ii",
            FamilyKind::CanonicalSlash => "canonical-slash",
            FamilyKind::Slash => "slash",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyKind {
    type Err = BcsError;

    fn from_str(s: &str) -> Result<Self> {
        let k = match s.to_ascii_lowercase().as_str() {
            "normal" | "bccg" | "cole-green" => FamilyKind::Normal,
            "double-exponential" | "de" | "laplace" => FamilyKind::DoubleExponential,
            "power-exponential" | "pe" | "bcpe" => FamilyKind::PowerExponential,
            "cauchy" => FamilyKind::Cauchy,
            "t" | "student-t" | "bct" => FamilyKind::StudentT,
            "logistic-i" | "logistic1" | "type-i-logistic" => FamilyKind::LogisticI,
            "logistic-ii" | "logistic2" | "type-ii-logistic" => FamilyKind::LogisticII,
            "canonical-slash" | "cslash" => FamilyKind::CanonicalSlash,
            "slash" | "bcslash" => FamilyKind::Slash,
            other => {
                return Err(BcsError::InvalidParameter(format!("unknown family '{other}'")))
            }
        };
        Ok(k)
    }
}

impl DensityFamily {
    pub fn new(kind: FamilyKind, extra: Option<f64>) -> Result<Self> {
        let family = match (kind, extra) {
            (FamilyKind::Normal, None) => DensityFamily::Normal,
            (FamilyKind::DoubleExponential, None) => DensityFamily::DoubleExponential,
            (FamilyKind::PowerExponential, Some(tau)) => DensityFamily::PowerExponential { tau },
            (FamilyKind::Cauchy, None) => DensityFamily::Cauchy,
            (FamilyKind::StudentT, Some(tau)) => DensityFamily::StudentT { tau },
            (FamilyKind::LogisticI, None) => DensityFamily::LogisticI,
            (FamilyKind::LogisticII, None) => DensityFamily::LogisticII,
            (FamilyKind::CanonicalSlash, None) => DensityFamily::CanonicalSlash,
            (FamilyKind::Slash, Some(q)) => DensityFamily::Slash { q },
            (k, Some(_)) => {
                return Err(BcsError::InvalidParameter(format!(
                    "family {k} takes no extra parameter"
                )))
            }
            (k, None) => {
                return Err(BcsError::InvalidParameter(format!(
                    "family {k} requires an extra parameter"
                )))
            }
        };
        family.validate()?;
        Ok(family)
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            DensityFamily::Normal => FamilyKind::Normal,
            DensityFamily::DoubleExponential => FamilyKind::DoubleExponential,
            DensityFamily::PowerExponential { .. } => FamilyKind::PowerExponential,
            DensityFamily::Cauchy => FamilyKind::Cauchy,
            DensityFamily::StudentT { .. } => FamilyKind::StudentT,
            DensityFamily::LogisticI => FamilyKind::LogisticI,
            DensityFamily::LogisticII => FamilyKind::LogisticII,
            DensityFamily::CanonicalSlash => FamilyKind::CanonicalSlash,
            DensityFamily::Slash { .. } => FamilyKind::Slash,
        }
    }

    /// τ for power exponential and Student-t, q for slash.
    pub fn extra(&self) -> Option<f64> {
        match *self {
            DensityFamily::PowerExponential { tau } | DensityFamily::StudentT { tau } => Some(tau),
            DensityFamily::Slash { q } => Some(q),
            _ => None,
        }
    }

    /// Same family with the shape parameter replaced; a no-op for families without one.
    pub fn with_extra(&self, value: f64) -> Self {
        match self {
            DensityFamily::PowerExponential { .. } => DensityFamily::PowerExponential { tau: value },
            DensityFamily::StudentT { .. } => DensityFamily::StudentT { tau: value },
            DensityFamily::Slash { .. } => DensityFamily::Slash { q: value },
            other => *other,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.extra() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(BcsError::InvalidParameter(format!(
                    "extra parameter of {} must be positive and finite, got {v}",
                    self.kind()
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for DensityFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.extra() {
            Some(v) => write!(f, "{}({v})", self.kind()),
            None => write!(f, "{}", self.kind()),
        }
    }
}

/// Generator value at `u` with its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorEval {
    pub r: f64,
    pub log_r: f64,
    pub dr_du: f64,
    /// `d log r / du`
    pub dlog_r: f64,
    /// `d² log r / du²`
    pub d2log_r: f64,
}

/// Power exponential constants: (ln p(τ), ln of the normalizing constant).
fn power_exponential_constants(tau: f64) -> (f64, f64) {
    let ln_p = 0.5 * (-(2.0 / tau) * LN_2 + ln_gamma(1.0 / tau) - ln_gamma(3.0 / tau));
    let ln_norm = tau.ln() - ln_p - (1.0 + 1.0 / tau) * LN_2 - ln_gamma(1.0 / tau);
    (ln_p, ln_norm)
}

/// `ln r(u)` and its first two derivatives in `u`.
pub(crate) fn log_generator(family: &DensityFamily, u: f64) -> (f64, f64, f64) {
    match *family {
        DensityFamily::Normal => (-0.5 * (2.0 * PI).ln() - 0.5 * u, -0.5, 0.0),
        DensityFamily::DoubleExponential => {
            let s = u.sqrt();
            let l = (0.5 * SQRT_2).ln() - SQRT_2 * s;
            if u == 0.0 {
                (l, f64::NEG_INFINITY, f64::INFINITY)
            } else {
                (l, -1.0 / (SQRT_2 * s), 1.0 / (2.0 * SQRT_2 * u * s))
            }
        }
        DensityFamily::PowerExponential { tau } => {
            let (ln_p, ln_norm) = power_exponential_constants(tau);
            let ln_k = -LN_2 - tau * ln_p;
            let h = 0.5 * tau;
            if u == 0.0 {
                let d1 = if tau < 2.0 {
                    f64::NEG_INFINITY
                } else if tau == 2.0 {
                    -h * ln_k.exp()
                } else {
                    0.0
                };
                let d2 = if tau == 2.0 || tau == 4.0 {
                    -ln_k.exp() * h * (h - 1.0) * if tau == 4.0 { 1.0 } else { 0.0 }
                } else if tau > 4.0 {
                    0.0
                } else if tau < 2.0 {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                };
                return (ln_norm, d1, d2);
            }
            let ln_u = u.ln();
            let l = ln_norm - (ln_k + h * ln_u).exp();
            let d1 = -h * (ln_k + (h - 1.0) * ln_u).exp();
            let d2 = -h * (h - 1.0) * (ln_k + (h - 2.0) * ln_u).exp();
            (l, d1, d2)
        }
        DensityFamily::Cauchy => {
            let w = 1.0 + u;
            (-PI.ln() - u.ln_1p(), -1.0 / w, 1.0 / (w * w))
        }
        DensityFamily::StudentT { tau } => {
            let c = 0.5 * tau * tau.ln() - ln_beta(0.5, 0.5 * tau);
            let w = tau + u;
            let e = 0.5 * (tau + 1.0);
            (c - e * w.ln(), -e / w, e / (w * w))
        }
        DensityFamily::LogisticI => {
            let l = LOGISTIC_I_CONSTANT.ln() - u - 2.0 * (-u).exp().ln_1p();
            let ch = (0.5 * u).cosh();
            (l, -(0.5 * u).tanh(), -0.5 / (ch * ch))
        }
        DensityFamily::LogisticII => {
            let s = u.sqrt();
            let l = -s - 2.0 * (-s).exp().ln_1p();
            if s < 1e-2 {
                let s2 = s * s;
                let d1 = -0.25 + s2 / 48.0 - s2 * s2 / 480.0;
                let d2 = 1.0 / 48.0 - s2 / 240.0 + 17.0 * s2 * s2 / 26_880.0;
                (l, d1, d2)
            } else {
                let th = (0.5 * s).tanh();
                let ch = (0.5 * s).cosh();
                let sech2 = 1.0 / (ch * ch);
                let d1 = -th / (2.0 * s);
                let d2 = (2.0 * th - s * sech2) / (8.0 * s * s * s);
                (l, d1, d2)
            }
        }
        DensityFamily::CanonicalSlash => {
            let x = 0.5 * u;
            let base = -0.5 * (2.0 * PI).ln() - LN_2;
            if x < 0.05 {
                let ratio = if x == 0.0 { 1.0 } else { -(-x).exp_m1() / x };
                let x2 = x * x;
                let b = -0.5 + x / 12.0 - x * x2 / 720.0 + x2 * x2 * x / 30_240.0;
                let db = 1.0 / 12.0 - x2 / 240.0 + x2 * x2 / 6_048.0;
                (base + ratio.ln(), 0.5 * b, 0.25 * db)
            } else {
                let em1 = x.exp_m1();
                let l = base + (-(-x).exp_m1() / x).ln();
                let d1 = 0.5 * (1.0 / em1 - 1.0 / x);
                let em1_neg = (-x).exp_m1();
                let d2 = 0.25 * (1.0 / (x * x) - (-x).exp() / (em1_neg * em1_neg));
                (l, d1, d2)
            }
        }
        DensityFamily::Slash { q } => {
            let a = 0.5 * (q + 1.0);
            let x = 0.5 * u;
            let ln_c = q.ln() + (0.5 * q - 1.0) * LN_2 - 0.5 * PI.ln();
            if x.is_infinite() {
                return (f64::NEG_INFINITY, 0.0, 0.0);
            }
            let h0 = ln_scaled_lower_gamma(a, x);
            let rho1 = (ln_scaled_lower_gamma(a + 1.0, x) - h0).exp();
            let rho2 = (ln_scaled_lower_gamma(a + 2.0, x) - h0).exp();
            (ln_c - a * LN_2 + h0, -0.5 * rho1, -0.25 * (rho1 * rho1 - rho2))
        }
    }
}

/// `r(u)`, `log r(u)` and `r′(u)`, with derivatives of `log r` attached.
pub fn eval_generator(family: &DensityFamily, u: f64) -> Result<GeneratorEval> {
    family.validate()?;
    if !(u >= 0.0) {
        return Err(BcsError::Domain(format!("generator argument must be >= 0, got {u}")));
    }
    let (log_r, d1, d2) = log_generator(family, u);
    let r = log_r.exp();
    Ok(GeneratorEval {
        r,
        log_r,
        dr_du: r * d1,
        dlog_r: d1,
        d2log_r: d2,
    })
}

/// Standard symmetric density `r(s²)`.
pub fn symmetric_pdf(family: &DensityFamily, s: f64) -> f64 {
    if s.is_infinite() {
        return 0.0;
    }
    log_generator(family, s * s).0.exp()
}

pub(crate) fn log_symmetric_pdf(family: &DensityFamily, s: f64) -> f64 {
    log_generator(family, s * s).0
}

const GRID_STEP: f64 = 0.05;
const GRID_NODES: usize = 800;
const GRID_MAX: f64 = GRID_STEP * GRID_NODES as f64;
const PANEL_POINTS: usize = 20;

struct TailTable {
    /// `tail[k] = ∫_{k·h}^∞ r(t²) dt`
    tail: Vec<f64>,
    gl_nodes: Vec<f64>,
    gl_weights: Vec<f64>,
}

impl TailTable {
    fn build(family: DensityFamily) -> Self {
        let (gl_nodes, gl_weights) = gauss_legendre(PANEL_POINTS);
        let density = |t: f64| symmetric_pdf(&family, t);
        let far = integrate(density, GRID_MAX, f64::INFINITY, &QuadratureSpec::default())
            .unwrap_or(0.0);
        let mut tail = vec![0.0; GRID_NODES + 1];
        tail[GRID_NODES] = far;
        let mut table = Self {
            tail,
            gl_nodes,
            gl_weights,
        };
        for k in (0..GRID_NODES).rev() {
            let a = k as f64 * GRID_STEP;
            let panel = table.panel_integral(&density, a, a + GRID_STEP);
            table.tail[k] = table.tail[k + 1] + panel;
        }
        table
    }

    fn panel_integral(&self, f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.gl_nodes
            .iter()
            .zip(&self.gl_weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
            * h
    }

    /// `∫_s^∞` for `0 <= s < GRID_MAX`.
    fn upper(&self, family: &DensityFamily, s: f64) -> f64 {
        let k = ((s / GRID_STEP).floor() as usize).min(GRID_NODES - 1);
        let next = (k + 1) as f64 * GRID_STEP;
        let density = |t: f64| symmetric_pdf(family, t);
        self.tail[k + 1] + self.panel_integral(&density, s, next)
    }
}

fn logistic_i_table() -> &'static TailTable {
    static TABLE: OnceLock<TailTable> = OnceLock::new();
    TABLE.get_or_init(|| TailTable::build(DensityFamily::LogisticI))
}

/// Upper tail mass `∫_s^∞ r(t²) dt = R(−s)` for `s >= 0`.
fn upper_tail(family: &DensityFamily, s: f64) -> Result<f64> {
    debug_assert!(s >= 0.0);
    let s = s.abs();
    if s.is_infinite() {
        return Ok(0.0);
    }
    let v = match *family {
        DensityFamily::Normal => std_normal_sf(s),
        DensityFamily::DoubleExponential => 0.5 * (-SQRT_2 * s).exp(),
        DensityFamily::PowerExponential { tau } => {
            let (ln_p, _) = power_exponential_constants(tau);
            let t = (tau * s.ln() - LN_2 - tau * ln_p).exp();
            if s == 0.0 {
                0.5
            } else {
                0.5 * reg_incomplete_gamma_upper(1.0 / tau, t)?
            }
        }
        DensityFamily::Cauchy => (1.0 / s).atan() / PI,
        DensityFamily::StudentT { tau } => {
            if s == 0.0 {
                0.5
            } else {
                // τ/(τ+s²) computed without cancellation for large s.
                let x = 1.0 / (1.0 + s * s / tau);
                0.5 * reg_incomplete_beta(0.5 * tau, 0.5, x)?
            }
        }
        DensityFamily::LogisticI => {
            if s < GRID_MAX {
                logistic_i_table().upper(family, s)
            } else {
                integrate(
                    |t| symmetric_pdf(family, t),
                    s,
                    f64::INFINITY,
                    &QuadratureSpec::default(),
                )?
            }
        }
        DensityFamily::LogisticII => 1.0 / (1.0 + s.exp()),
        // Slash laws: R(s) = Φ(s) − s r(s²)/q, so the upper tail is
        // Φ̄(s) + s r(s²)/q with both terms positive.
        DensityFamily::CanonicalSlash => {
            if s == 0.0 {
                0.5
            } else {
                std_normal_sf(s) + s * symmetric_pdf(family, s)
            }
        }
        DensityFamily::Slash { q } => {
            if s == 0.0 {
                0.5
            } else {
                std_normal_sf(s) + s * symmetric_pdf(family, s) / q
            }
        }
    };
    Ok(v)
}

/// Standard symmetric cdf `R(s) = ∫_{−∞}^s r(u²) du`.
pub fn symmetric_cdf(family: &DensityFamily, s: f64) -> Result<f64> {
    family.validate()?;
    if s.is_nan() {
        return Err(BcsError::Domain("symmetric cdf at NaN".into()));
    }
    if s == 0.0 {
        return Ok(0.5);
    }
    if s <= 0.0 {
        upper_tail(family, -s)
    } else {
        Ok(1.0 - upper_tail(family, s)?)
    }
}

/// Survival `1 − R(s)`, accurate in the right tail.
pub fn symmetric_sf(family: &DensityFamily, s: f64) -> Result<f64> {
    symmetric_cdf(family, -s)
}

/// Point `s >= 0` with upper tail mass `p ∈ (0, 1/2]`.
fn upper_point(family: &DensityFamily, p: f64) -> Result<f64> {
    if p >= 0.5 {
        return Ok(0.0);
    }
    let s = match *family {
        DensityFamily::Normal => -std_normal_quantile(p)?,
        DensityFamily::DoubleExponential => -(2.0 * p).ln() / SQRT_2,
        DensityFamily::Cauchy => 1.0 / (PI * p).tan(),
        DensityFamily::LogisticII => ((1.0 - p) / p).ln(),
        _ => {
            let ln_p = p.ln();
            let g = |s: f64| {
                let t = upper_tail(family, s).unwrap_or(f64::NAN);
                if t <= 0.0 {
                    -1e3 - s - ln_p
                } else {
                    t.ln() - ln_p
                }
            };
            let mut hi = 1.0;
            while g(hi) > 0.0 {
                hi *= 2.0;
                if !hi.is_finite() {
                    return Err(BcsError::NotBracketed { lo: 0.0, hi });
                }
            }
            let lo = if hi > 1.0 { 0.5 * hi } else { 0.0 };
            find_root(g, (lo, hi), 1e-15)?
        }
    };
    Ok(s)
}

/// Quantile `s_α` of the standard symmetric law.
pub fn symmetric_quantile(family: &DensityFamily, alpha: f64) -> Result<f64> {
    family.validate()?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(BcsError::Domain(format!("quantile level must lie in (0, 1), got {alpha}")));
    }
    if alpha < 0.5 {
        Ok(-upper_point(family, alpha)?)
    } else {
        Ok(upper_point(family, 1.0 - alpha)?)
    }
}

/// Lower-tail quantile from a probability given as `p` (if `lower`) or
/// as the complementary mass `1 − p` (if not), avoiding `1 − small` round-off.
pub(crate) fn symmetric_quantile_split(family: &DensityFamily, mass: f64, lower: bool) -> Result<f64> {
    if !(mass > 0.0 && mass < 1.0) {
        return Err(BcsError::Domain(format!("tail mass must lie in (0, 1), got {mass}")));
    }
    let s = if mass <= 0.5 {
        upper_point(family, mass)?
    } else {
        -upper_point(family, 1.0 - mass)?
    };
    Ok(if lower { -s } else { s })
}

/// Closed-form weighting function `ϖ(z)`.
pub fn weight_function(family: &DensityFamily, z: f64) -> Result<f64> {
    family.validate()?;
    if !z.is_finite() {
        return Err(BcsError::Domain(format!("weight function needs finite z, got {z}")));
    }
    let singular_at_zero = match family {
        DensityFamily::DoubleExponential
        | DensityFamily::LogisticII
        | DensityFamily::CanonicalSlash
        | DensityFamily::Slash { .. } => true,
        DensityFamily::PowerExponential { tau } => *tau < 2.0,
        _ => false,
    };
    if z == 0.0 && singular_at_zero {
        return Err(BcsError::Singularity(family.to_string()));
    }
    let z2 = z * z;
    let az = z.abs();
    let w = match *family {
        DensityFamily::Normal => 1.0,
        DensityFamily::DoubleExponential => SQRT_2 / az,
        DensityFamily::PowerExponential { tau } => {
            let (ln_p, _) = power_exponential_constants(tau);
            tau * z2.powf(0.5 * tau - 1.0) / (2.0 * (tau * ln_p).exp())
        }
        DensityFamily::Cauchy => 2.0 / (1.0 + z2),
        DensityFamily::StudentT { tau } => (tau + 1.0) / (tau + z2),
        DensityFamily::LogisticI => {
            let e = (-z2).exp();
            -2.0 * (e - 1.0) / (e + 1.0)
        }
        DensityFamily::LogisticII => {
            let e = (-az).exp();
            (1.0 - e) / (az * (1.0 + e))
        }
        DensityFamily::CanonicalSlash => {
            // 2/z² − e^{−z²/2}/(1 − e^{−z²/2}), rearranged to avoid cancellation.
            let x = 0.5 * z2;
            if x < 0.05 {
                let x2 = x * x;
                0.5 - x / 12.0 + x * x2 / 720.0 - x2 * x2 * x / 30_240.0
            } else {
                1.0 / x - 1.0 / x.exp_m1()
            }
        }
        DensityFamily::Slash { q } => {
            let x = 0.5 * z2;
            2.0 * lower_incomplete_gamma(0.5 * (q + 3.0), x)?
                / (z2 * lower_incomplete_gamma(0.5 * (q + 1.0), x)?)
        }
    };
    Ok(w)
}
