//! Dormand–Prince 5(4) integrator with adaptive step size.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h_init: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h_max: f64::INFINITY, h_init: 1e-3, max_steps: 1_000_000 }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
///
/// `observer(t, y)` is called after every accepted step and may return `false` to stop early.
/// Returns the final time and state.
pub fn integrate<F, O>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> Result<(f64, Vec<f64>)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64]) -> bool,
{
    let n = y0.len();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    let mut h = opts.h_init.min(opts.h_max).min((t1 - t0).abs()).max(1e-14);
    rhs(t, &y, &mut k[0]);
    let mut steps = 0;
    let mut err_prev: f64 = 1e-4;
    while dir * (t1 - t) > 0.0 {
        if steps >= opts.max_steps {
            return Err(Error::NoConvergence { iterations: steps, residual: (t1 - t).abs() });
        }
        steps += 1;
        if h > (t1 - t).abs() {
            h = (t1 - t).abs();
        }
        let hs = dir * h;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for j in 0..s {
                    acc += hs * A[s][j] * k[j][i];
                }
                tmp[i] = acc;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            rhs(t + C[s] * hs, &tmp, &mut tail[0]);
        }
        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut s5 = y[i];
            let mut e = 0.0;
            for s in 0..7 {
                s5 += hs * B5[s] * k[s][i];
                e += hs * (B5[s] - B4[s]) * k[s][i];
            }
            y5[i] = s5;
            let sc = opts.atol + opts.rtol * y[i].abs().max(s5.abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            h *= 0.25;
            if h < 1e-300 {
                return Err(Error::NoConvergence { iterations: steps, residual: f64::NAN });
            }
            continue;
        }
        if err <= 1.0 {
            t += hs;
            std::mem::swap(&mut y, &mut y5);
            // first-same-as-last
            let last = k[6].clone();
            k[0].copy_from_slice(&last);
            if !observer(t, &y) {
                return Ok((t, y));
            }
            let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            h = (h * fac.clamp(0.2, 5.0)).min(opts.h_max);
            err_prev = err.max(1e-4);
        } else {
            let fac = 0.9 * err.powf(-0.2);
            h *= fac.clamp(0.1, 1.0);
            if h < 1e-15 * t.abs().max(1.0) {
                return Err(Error::NoConvergence { iterations: steps, residual: err });
            }
        }
    }
    Ok((t, y))
}
