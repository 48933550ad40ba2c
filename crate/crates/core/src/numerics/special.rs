//! Divided-difference functions that stay accurate through their removable singularities.

/// `(e^x - 1) / x`, equal to 1 at `x = 0`.
pub fn phi1(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.exp_m1() / x
    }
}

/// `(e^x - 1 - x) / x^2`, equal to 1/2 at `x = 0`.
pub fn phi2(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // sum_k x^k / (k + 2)!
        let mut term = 0.5;
        let mut sum = 0.5;
        for k in 1..12 {
            term *= x / (k as f64 + 2.0);
            sum += term;
        }
        sum
    } else {
        (x.exp_m1() - x) / (x * x)
    }
}

/// Bernoulli function `x / (e^x - 1)`, equal to 1 at `x = 0`.
pub fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        1.0 - x / 2.0 + x * x / 12.0 - x.powi(4) / 720.0
    } else {
        x / x.exp_m1()
    }
}

/// Derivative of [`bernoulli`].
pub fn bernoulli_derivative(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        -0.5 + x / 6.0 - x.powi(3) / 180.0
    } else {
        let b = bernoulli(x);
        b * (1.0 - b) / x - b
    }
}

/// Logarithmic mean `(a - b) / (ln a - ln b)` of two positive numbers, equal to `a` when `a = b`.
pub fn logmean(a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    let t = (a - b) / (a + b);
    if t.abs() < 1e-4 {
        let t2 = t * t;
        m * (1.0 - t2 / 3.0 - 4.0 * t2 * t2 / 45.0)
    } else {
        m * t / t.atanh()
    }
}

/// `(ln(c/s) - (c - s)/c) / (c - s)^2`, the kernel of `∫ ζ / c(ζ)^2 dζ` for affine `c`.
///
/// Equals `1 / (2 s^2)` at `c = s`.
pub fn log_ratio_kernel(s: f64, c: f64) -> f64 {
    let r = (c - s) / s;
    if r.abs() < 1e-2 {
        // ln(1+r) - r/(1+r) = sum_{k>=2} (-1)^k (k-1)/k r^k
        let mut sum = 0.0;
        let mut p = 1.0;
        for k in 2..14 {
            let kf = k as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (kf - 1.0) / kf * p;
            p *= r;
        }
        sum / (s * s)
    } else {
        ((c / s).ln() - (c - s) / c) / ((c - s) * (c - s))
    }
}

/// Sign with `sgn(0) = 0`.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
