use crate::error::{BcsError, Result};

const MAX_ITER: usize = 300;

/// Brent's method on a sign-changing bracket.
///
/// Stops when `|f(x)| <= tol` scaled residual is reached or the bracket is
/// narrower than `tol`. Iterates never leave `[lo, hi]`.
pub fn find_root<F>(f: F, bracket: (f64, f64), tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = bracket;
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    let mut fa = f(a);
    let mut fb = f(b);
    if fa.is_nan() || fb.is_nan() {
        return Err(BcsError::Evaluation("NaN at bracket endpoint".into()));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(BcsError::NotBracketed { lo: a, hi: b });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b);
        if fb.is_nan() {
            return Err(BcsError::Evaluation(format!("NaN at x = {b}")));
        }
    }
    Ok(b)
}

/// Expands `(lo, hi)` geometrically around `start` until `f` changes sign.
pub fn expand_bracket<F>(f: &F, start: f64, width: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let mut lo = start - width;
    let mut hi = start + width;
    let mut step = width;
    for _ in 0..2100 {
        let (flo, fhi) = (f(lo), f(hi));
        if flo.signum() != fhi.signum() || flo == 0.0 || fhi == 0.0 {
            return Ok((lo, hi));
        }
        step *= 2.0;
        if flo.abs() < fhi.abs() {
            lo -= step;
        } else {
            hi += step;
        }
        if !lo.is_finite() || !hi.is_finite() {
            break;
        }
    }
    Err(BcsError::NotBracketed { lo, hi })
}
