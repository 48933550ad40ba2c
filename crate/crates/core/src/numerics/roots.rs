//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Brent's method on a bracket `[a, b]` with `f(a) * f(b) <= 0`.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(Error::BracketFailure { lo: a, hi: b, flo: fa, fhi: fb });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
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
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::BracketFailure { lo: a, hi: b, flo: fa, fhi: fb });
        }
    }
    Ok(b)
}

/// Grows `[x0 - step, x0 + step]` geometrically until `f` changes sign.
pub fn expand_bracket<F: FnMut(f64) -> f64>(mut f: F, x0: f64, step: f64, max_doublings: usize) -> Result<(f64, f64)> {
    let mut h = step;
    let mut lo = x0 - h;
    let mut hi = x0 + h;
    let mut flo = f(lo);
    let mut fhi = f(hi);
    for _ in 0..max_doublings {
        if flo.is_finite() && fhi.is_finite() && flo.signum() != fhi.signum() {
            return Ok((lo, hi));
        }
        h *= 2.0;
        lo = x0 - h;
        hi = x0 + h;
        flo = f(lo);
        fhi = f(hi);
    }
    if flo.is_finite() && fhi.is_finite() && flo.signum() != fhi.signum() {
        return Ok((lo, hi));
    }
    Err(Error::BracketFailure { lo, hi, flo, fhi })
}

/// Newton's method safeguarded by bisection on a bracket `[lo, hi]`.
pub fn newton_bisect<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (mut lo, mut hi) = (lo, hi);
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::BracketFailure { lo, hi, flo, fhi });
    }
    if flo > 0.0 {
        std::mem::swap(&mut lo, &mut hi);
    }
    // now f(lo) < 0 < f(hi), lo may exceed hi
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = if dfx != 0.0 { x - fx / dfx } else { f64::NAN };
        let (a, b) = if lo < hi { (lo, hi) } else { (hi, lo) };
        if !(next > a && next < b) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= tol * (1.0 + x.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}
