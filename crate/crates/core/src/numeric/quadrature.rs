//! Globally adaptive Gauss–Kronrod (10/21) quadrature.
//!
//! Infinite ranges are folded onto `(0, 1)` with `x = t / (1 − t)`. The half
//! of the mapped range next to `t = 1` is integrated in the reflected
//! coordinate `s = 1 − t`, so intervals adjacent to the infinite end can be
//! refined far below the spacing of doubles near 1.

use crate::error::{BcsError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) || self.max_subdivisions < 1 {
            return Err(BcsError::InvalidParameter(format!(
                "quadrature tolerances must be positive and subdivisions >= 1: {self:?}"
            )));
        }
        Ok(())
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// One GK21 panel: returns (Kronrod estimate, error estimate).
fn gk21(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_g = 0.0;
    let mut res_k = fc * WGK[10];
    let mut res_abs = fc.abs() * WGK[10];
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    if !res_k.is_finite() {
        return Err(BcsError::Evaluation(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok((result, err))
}

/// How a working coordinate maps back onto the integration variable.
#[derive(Clone, Copy)]
enum Piece {
    /// x = v
    Identity,
    /// x = origin + dir · t/(1−t), t ∈ [0, ½]
    Near { origin: f64, dir: f64 },
    /// x = origin + dir · (1−s)/s, s ∈ (0, ½]
    Far { origin: f64, dir: f64 },
}

impl Piece {
    fn eval(&self, f: &dyn Fn(f64) -> f64, v: f64) -> f64 {
        match *self {
            Piece::Identity => f(v),
            Piece::Near { origin, dir } => {
                let w = 1.0 - v;
                f(origin + dir * v / w) / (w * w)
            }
            Piece::Far { origin, dir } => {
                if v == 0.0 {
                    return 0.0;
                }
                f(origin + dir * (1.0 - v) / v) / (v * v)
            }
        }
    }
}

struct Interval {
    piece: usize,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    splittable: bool,
}

/// Integral of `f` over `(lo, hi)`; either bound may be infinite.
pub fn integrate<F>(f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_with_error(f, lo, hi, spec).map(|(v, _)| v)
}

/// Like [`integrate`] but also returns the final error estimate.
pub fn integrate_with_error<F>(f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    if lo.is_nan() || hi.is_nan() {
        return Err(BcsError::Domain("integration bounds are NaN".into()));
    }
    if lo == hi {
        return Ok((0.0, 0.0));
    }
    if lo > hi {
        return integrate_with_error(f, hi, lo, spec).map(|(v, e)| (-v, e));
    }

    let mut pieces: Vec<(Piece, f64, f64)> = Vec::new();
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => pieces.push((Piece::Identity, lo, hi)),
        (true, false) => {
            pieces.push((Piece::Near { origin: lo, dir: 1.0 }, 0.0, 0.5));
            pieces.push((Piece::Far { origin: lo, dir: 1.0 }, 0.0, 0.5));
        }
        (false, true) => {
            pieces.push((Piece::Near { origin: hi, dir: -1.0 }, 0.0, 0.5));
            pieces.push((Piece::Far { origin: hi, dir: -1.0 }, 0.0, 0.5));
        }
        (false, false) => {
            for dir in [-1.0, 1.0] {
                pieces.push((Piece::Near { origin: 0.0, dir }, 0.0, 0.5));
                pieces.push((Piece::Far { origin: 0.0, dir }, 0.0, 0.5));
            }
        }
    }

    let f_ref: &dyn Fn(f64) -> f64 = &f;
    let mut intervals = Vec::with_capacity(spec.max_subdivisions + pieces.len());
    for (idx, (piece, a, b)) in pieces.iter().enumerate() {
        let (value, error) = gk21(&|v| piece.eval(f_ref, v), *a, *b)?;
        intervals.push(Interval {
            piece: idx,
            a: *a,
            b: *b,
            value,
            error,
            splittable: true,
        });
    }

    let mut subdivisions = 0usize;
    loop {
        let total: f64 = intervals.iter().map(|i| i.value).sum();
        let total_err: f64 = intervals.iter().map(|i| i.error).sum();
        let target = spec.abs_tol.max(spec.rel_tol * total.abs());
        if total_err <= target {
            return Ok((total, total_err));
        }
        let worst = intervals
            .iter()
            .enumerate()
            .filter(|(_, i)| i.splittable)
            .max_by(|(_, x), (_, y)| x.error.total_cmp(&y.error))
            .map(|(k, _)| k);
        let Some(k) = worst else {
            return Err(BcsError::QuadratureNonConvergence {
                estimate: total,
                error: total_err,
            });
        };
        if subdivisions >= spec.max_subdivisions {
            return Err(BcsError::QuadratureNonConvergence {
                estimate: total,
                error: total_err,
            });
        }
        subdivisions += 1;

        let Interval { piece, a, b, .. } = intervals[k];
        let mid = 0.5 * (a + b);
        let piece_map = pieces[piece].0;
        let eval = |v: f64| piece_map.eval(f_ref, v);
        let (v1, e1) = gk21(&eval, a, mid)?;
        let (v2, e2) = gk21(&eval, mid, b)?;
        let tiny = |lo: f64, hi: f64| (hi - lo) <= 1e3 * f64::EPSILON * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        intervals[k] = Interval {
            piece,
            a,
            b: mid,
            value: v1,
            error: e1,
            splittable: !tiny(a, mid),
        };
        intervals.push(Interval {
            piece,
            a: mid,
            b,
            value: v2,
            error: e2,
            splittable: !tiny(mid, b),
        });
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = p1;
            dp = n as f64 * (x * pn - p0) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
