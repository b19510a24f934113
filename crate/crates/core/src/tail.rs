//! Right-tail classification of BCS laws.

use crate::dist::{quantile, sf, BcsParams};
use crate::error::{BcsError, Result};
use crate::numeric::special::ln_gamma;
use crate::symmetric::DensityFamily;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, SQRT_2};

/// Rigby's four right-tail categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Heaviness {
    NonHeavy,
    HeavyLighterThanParetian,
    Paretian,
    HeavierThanParetian,
}

/// Asymptotic form of `log f(y)` as `y → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form")]
pub enum TailForm {
    /// `−k2 (log y)^k1`
    LogPower { k1: f64, k2: f64 },
    /// `−k4 y^k3`
    Power { k3: f64, k4: f64 },
    /// `−k6 exp(k5 y)`
    Exponential { k5: f64, k6: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    /// Tail index; `+∞` for tails heavier than any Paretian tail.
    pub tail_index: f64,
    pub heaviness: Heaviness,
    pub form: TailForm,
    /// Set when a closed form is used outside the parameter range it was derived on.
    pub extrapolated: bool,
}

impl TailForm {
    pub fn heaviness(&self) -> Heaviness {
        match *self {
            TailForm::Power { k3, .. } if k3 >= 1.0 => Heaviness::NonHeavy,
            TailForm::Power { .. } => Heaviness::HeavyLighterThanParetian,
            TailForm::LogPower { k1, .. } if k1 > 1.0 => Heaviness::HeavyLighterThanParetian,
            TailForm::LogPower { k2, .. } if k2 > 1.0 => Heaviness::Paretian,
            TailForm::LogPower { .. } => Heaviness::HeavierThanParetian,
            TailForm::Exponential { .. } => Heaviness::NonHeavy,
        }
    }

    /// Tail index implied by the form.
    pub fn tail_index(&self) -> f64 {
        match self.heaviness() {
            Heaviness::NonHeavy | Heaviness::HeavyLighterThanParetian => 0.0,
            Heaviness::HeavierThanParetian => f64::INFINITY,
            Heaviness::Paretian => match *self {
                TailForm::LogPower { k2, .. } => 1.0 / (k2 - 1.0),
                _ => unreachable!(),
            },
        }
    }
}

/// `p(τ)^τ` of the power exponential generator.
fn pe_p_pow(tau: f64) -> f64 {
    (0.5 * tau * (-(2.0 / tau) * LN_2 + ln_gamma(1.0 / tau) - ln_gamma(3.0 / tau))).exp()
}

/// Tail index of the right tail.
pub fn tail_index(p: &BcsParams) -> Result<f64> {
    p.validate()?;
    let lambda = p.effective_lambda();
    if lambda < 0.0 {
        return Ok(1.0 / lambda.abs());
    }
    let inf = f64::INFINITY;
    let xi = if lambda > 0.0 {
        match p.family {
            DensityFamily::Cauchy | DensityFamily::CanonicalSlash => 1.0 / lambda,
            DensityFamily::StudentT { tau } => 1.0 / (lambda * tau),
            DensityFamily::Slash { q } => 1.0 / (lambda * q),
            _ => 0.0,
        }
    } else {
        match p.family {
            DensityFamily::Normal | DensityFamily::LogisticI => 0.0,
            DensityFamily::DoubleExponential => p.sigma / SQRT_2,
            DensityFamily::PowerExponential { tau } if tau > 1.0 => 0.0,
            DensityFamily::PowerExponential { tau } if tau == 1.0 => p.sigma / SQRT_2,
            DensityFamily::PowerExponential { .. } => inf,
            DensityFamily::LogisticII => p.sigma,
            DensityFamily::Cauchy
            | DensityFamily::StudentT { .. }
            | DensityFamily::CanonicalSlash
            | DensityFamily::Slash { .. } => inf,
        }
    };
    Ok(xi)
}

fn form(p: &BcsParams) -> TailForm {
    let (mu, sigma) = (p.mu, p.sigma);
    let lambda = p.effective_lambda();
    let log_power = |k1: f64, k2: f64| TailForm::LogPower { k1, k2 };
    let power = |k3: f64, k4: f64| TailForm::Power { k3, k4 };
    if lambda < 0.0 {
        return log_power(1.0, lambda.abs() + 1.0);
    }
    if lambda > 0.0 {
        let ml = mu.powf(lambda);
        return match p.family {
            DensityFamily::Normal => {
                power(2.0 * lambda, 1.0 / (2.0 * ml * ml * sigma * sigma * lambda * lambda))
            }
            DensityFamily::DoubleExponential => power(lambda, SQRT_2 / (ml * sigma * lambda)),
            DensityFamily::PowerExponential { tau } => power(
                lambda * tau,
                1.0 / (2.0 * pe_p_pow(tau) * ml.powf(tau) * (sigma * lambda).powf(tau)),
            ),
            DensityFamily::Cauchy | DensityFamily::CanonicalSlash => log_power(1.0, lambda + 1.0),
            DensityFamily::StudentT { tau } => log_power(1.0, lambda * tau + 1.0),
            DensityFamily::Slash { q } => log_power(1.0, lambda * q + 1.0),
            DensityFamily::LogisticI => {
                power(2.0 * lambda, 1.0 / (ml * ml * sigma * sigma * lambda * lambda))
            }
            DensityFamily::LogisticII => power(lambda, 1.0 / (ml * sigma * lambda)),
        };
    }
    match p.family {
        DensityFamily::Normal => log_power(2.0, 1.0 / (2.0 * sigma * sigma)),
        DensityFamily::DoubleExponential => log_power(1.0, SQRT_2 / sigma + 1.0),
        DensityFamily::PowerExponential { tau } if tau > 1.0 => {
            log_power(tau, 1.0 / (2.0 * pe_p_pow(tau) * sigma.powf(tau)))
        }
        DensityFamily::PowerExponential { tau } if tau == 1.0 => {
            log_power(1.0, SQRT_2 / sigma + 1.0)
        }
        DensityFamily::LogisticI => log_power(2.0, 1.0 / (sigma * sigma)),
        DensityFamily::LogisticII => log_power(1.0, 1.0 / sigma + 1.0),
        _ => log_power(1.0, 1.0),
    }
}

/// Tail index, Rigby category and asymptotic log-density coefficients.
pub fn tail_form(p: &BcsParams) -> Result<TailReport> {
    let xi = tail_index(p)?;
    let form = form(p);
    let extrapolated = matches!(p.family, DensityFamily::Slash { q } if q.fract() != 0.0);
    Ok(TailReport {
        tail_index: xi,
        heaviness: form.heaviness(),
        form,
        extrapolated,
    })
}

/// Default probe: quantile levels 0.99 to 0.9999.
pub const DEFAULT_PROBE: (f64, f64) = (0.99, 0.9999);
const PROBE_POINTS: usize = 50;

/// Least-squares slope of `log(1 − F(y))` against `log y` over the quantile
/// range `probe`; approximates `−1/ξ` for Paretian tails.
pub fn empirical_tail_slope(p: &BcsParams, probe: (f64, f64)) -> Result<f64> {
    let (lo, hi) = probe;
    if !(0.0 < lo && lo < hi && hi < 1.0) {
        return Err(BcsError::InvalidParameter(format!(
            "probe levels must satisfy 0 < lo < hi < 1, got ({lo}, {hi})"
        )));
    }
    let (a, b) = ((1.0 - lo).ln(), (1.0 - hi).ln());
    let mut xs = Vec::with_capacity(PROBE_POINTS);
    let mut ys = Vec::with_capacity(PROBE_POINTS);
    for i in 0..PROBE_POINTS {
        let t = i as f64 / (PROBE_POINTS - 1) as f64;
        let level = -(a + t * (b - a)).exp_m1();
        let y = quantile(level, p)?;
        let s = sf(y, p)?;
        if !(s >= 1e-300) || !y.is_finite() {
            return Err(BcsError::SurvivalUnderflow);
        }
        xs.push(y.ln());
        ys.push(s.ln());
    }
    let n = PROBE_POINTS as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bcs(sigma: f64, lambda: f64, family: DensityFamily) -> BcsParams {
        BcsParams::new(1.0, sigma, lambda, family).unwrap()
    }

    fn all_families() -> Vec<DensityFamily> {
        vec![
            DensityFamily::Normal,
            DensityFamily::DoubleExponential,
            DensityFamily::PowerExponential { tau: 0.5 },
            DensityFamily::PowerExponential { tau: 1.0 },
            DensityFamily::PowerExponential { tau: 2.5 },
            DensityFamily::Cauchy,
            DensityFamily::StudentT { tau: 4.0 },
            DensityFamily::LogisticI,
            DensityFamily::LogisticII,
            DensityFamily::CanonicalSlash,
            DensityFamily::Slash { q: 3.0 },
        ]
    }

    #[test]
    fn index_examples() {
        let t = bcs(1.0, 0.5, DensityFamily::StudentT { tau: 4.0 });
        assert_eq!(tail_index(&t).unwrap(), 0.5);
        assert_eq!(tail_index(&bcs(1.0, 0.5, DensityFamily::Normal)).unwrap(), 0.0);
        for fam in all_families() {
            assert_eq!(tail_index(&bcs(0.7, -0.25, fam)).unwrap(), 4.0);
        }
        let de = bcs(1.0, 0.0, DensityFamily::DoubleExponential);
        assert_eq!(tail_index(&de).unwrap(), 1.0 / SQRT_2);
        assert_eq!(tail_index(&bcs(1.0, -2.0, DensityFamily::Normal)).unwrap(), 0.5);
    }

    #[test]
    fn form_examples() {
        let lambda = 0.3;
        let (mu, sigma) = (2.0, 0.4);
        let p = BcsParams::new(mu, sigma, lambda, DensityFamily::Normal).unwrap();
        let r = tail_form(&p).unwrap();
        let k4 = 1.0 / (2.0 * mu.powf(2.0 * lambda) * sigma * sigma * lambda * lambda);
        match r.form {
            TailForm::Power { k3, k4: v } => {
                assert_eq!(k3, 0.6);
                assert!((v - k4).abs() < 1e-14 * k4);
            }
            _ => panic!(),
        }
        assert_eq!(r.heaviness, Heaviness::HeavyLighterThanParetian);
        let p = p.with_lambda(0.5);
        assert_eq!(tail_form(&p).unwrap().heaviness, Heaviness::NonHeavy);

        let t = tail_form(&bcs(1.0, 0.5, DensityFamily::StudentT { tau: 4.0 })).unwrap();
        assert_eq!(t.form, TailForm::LogPower { k1: 1.0, k2: 3.0 });
        assert_eq!(t.heaviness, Heaviness::Paretian);
        assert_eq!(t.tail_index, 0.5);

        let c = tail_form(&bcs(1.0, 0.0, DensityFamily::Cauchy)).unwrap();
        assert_eq!(c.form, TailForm::LogPower { k1: 1.0, k2: 1.0 });
        assert_eq!(c.heaviness, Heaviness::HeavierThanParetian);
    }

    #[test]
    fn power_exponential_at_unit_tau_matches_double_exponential() {
        for &lambda in &[0.0, 0.4] {
            let a = tail_form(&bcs(0.6, lambda, DensityFamily::PowerExponential { tau: 1.0 }));
            let b = tail_form(&bcs(0.6, lambda, DensityFamily::DoubleExponential));
            let (a, b) = (a.unwrap(), b.unwrap());
            assert_eq!(a.heaviness, b.heaviness);
            assert_eq!(a.tail_index, b.tail_index);
            match (a.form, b.form) {
                (TailForm::Power { k3, k4 }, TailForm::Power { k3: c3, k4: c4 }) => {
                    assert_eq!(k3, c3);
                    assert!((k4 - c4).abs() < 1e-13 * c4);
                }
                (x, y) => assert_eq!(x, y),
            }
        }
    }

    #[test]
    fn category_and_index_agree() {
        for fam in all_families() {
            for &lambda in &[-1.5, -0.3, 0.0, 0.2, 0.5, 1.0, 3.0] {
                for &sigma in &[0.3, 1.0, 2.0] {
                    let r = tail_form(&bcs(sigma, lambda, fam)).unwrap();
                    let implied = r.form.tail_index();
                    assert!(
                        implied == r.tail_index
                            || (implied - r.tail_index).abs() < 1e-12 * r.tail_index,
                        "{fam} λ={lambda} σ={sigma}: {r:?}"
                    );
                    if let TailForm::LogPower { k1, .. } = r.form {
                        assert!(k1 >= 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn slash_one_equals_canonical() {
        for &lambda in &[-0.5, 0.0, 0.7] {
            let a = tail_form(&bcs(0.5, lambda, DensityFamily::Slash { q: 1.0 })).unwrap();
            let b = tail_form(&bcs(0.5, lambda, DensityFamily::CanonicalSlash)).unwrap();
            assert_eq!(a, b);
        }
        assert!(tail_form(&bcs(0.5, 0.5, DensityFamily::Slash { q: 2.5 })).unwrap().extrapolated);
    }

    #[test]
    fn index_free_of_mu() {
        for fam in all_families() {
            for &lambda in &[-0.4, 0.0, 0.6] {
                let a = BcsParams::new(1.0, 0.5, lambda, fam).unwrap();
                let b = BcsParams::new(50.0, 0.5, lambda, fam).unwrap();
                assert_eq!(tail_index(&a).unwrap(), tail_index(&b).unwrap());
                if lambda != 0.0 {
                    let c = BcsParams::new(1.0, 1.7, lambda, fam).unwrap();
                    assert_eq!(tail_index(&a).unwrap(), tail_index(&c).unwrap());
                }
            }
        }
    }

    #[test]
    fn empirical_slopes() {
        let t = bcs(0.5, 0.5, DensityFamily::StudentT { tau: 4.0 });
        // Over the default probe the regression has not yet reached the
        // asymptotic −1/ξ = −2; the reference value comes from an external
        // evaluation of the same regression with the Student-t cdf.
        let s = empirical_tail_slope(&t, DEFAULT_PROBE).unwrap();
        assert!((s + 2.919_092_16).abs() < 1e-6, "{s}");
        let deep = empirical_tail_slope(&t, (1.0 - 1e-10, 1.0 - 1e-14)).unwrap();
        assert!((deep + 2.0).abs() < 0.02, "{deep}");
        let n = bcs(0.5, -0.5, DensityFamily::Normal);
        let s = empirical_tail_slope(&n, DEFAULT_PROBE).unwrap();
        assert!((s + 1.492_239_40).abs() < 1e-6, "{s}");
        let deep = empirical_tail_slope(&n, (1.0 - 1e-10, 1.0 - 1e-14)).unwrap();
        assert!((deep + 0.5).abs() < 0.005, "{deep}");
        let light = bcs(0.5, 0.5, DensityFamily::Normal);
        let s = empirical_tail_slope(&light, (1.0 - 1e-10, 1.0 - 1e-14)).unwrap();
        assert!(s < -10.0, "{s}");
        assert!(empirical_tail_slope(&t, (0.9, 0.5)).is_err());
    }
}
