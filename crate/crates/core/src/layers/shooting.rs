//! Layer limits computed by integrating the finite-`d` fast system, independent of the closed forms.
//!
//! For a trial equilibrium `(φ*, c1*)` on the slow manifold the layer orbit is traced outward
//! from `φ*` along the eigenvector of the stable (forward layer) or unstable (backward layer)
//! direction until `φ` reaches the junction potential. Newton on `(φ*, c1*)` makes the
//! concentrations there match the junction values. First-order limits are the central
//! difference in `d` of these finite-`d` limits, refined once by Richardson extrapolation.

use super::{layer_jump, JunctionValues, LayerLimit, LayerSide};
use crate::error::{Error, Result};
use crate::layers::fast::full_fast_rhs;
use crate::model::{eval_fg, IonPair};
use crate::numerics::ode::{self, OdeOptions};
use crate::numerics::roots;

#[derive(Debug, Clone, Copy)]
pub struct ShootingOptions {
    /// Distance from the equilibrium at which the linear eigenvector start is placed.
    pub offset: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Step in `d` for the first-order difference quotient.
    pub d_step: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self { offset: 1e-6, rtol: 1e-13, atol: 1e-15, d_step: 1e-2 }
    }
}

/// Finite-`d` layer: slow-manifold limit `(φ*, c1*, c2*)` and junction-side velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteLayer {
    pub phi: f64,
    pub c1: f64,
    pub c2: f64,
    pub u: f64,
}

/// Traces the layer out of `(φ*, c1*)` and returns the state where `φ = phi_side`.
fn trace(
    phi_star: f64,
    c1_star: f64,
    phi_side: f64,
    q: f64,
    side: LayerSide,
    ions: &IonPair,
    opts: &ShootingOptions,
) -> Result<[f64; 4]> {
    let (z1, z2) = (ions.z1, ions.z2);
    let c2_star = -(z1 * c1_star + q) / z2;
    let fg = eval_fg(c1_star, c2_star, 0.0, 0.0, ions);
    let k2 = z1 * fg.f1 + z2 * fg.f2;
    if !(k2 > 0.0) || !(c1_star > 0.0 && c2_star > 0.0) {
        return Err(Error::InvalidLimits(format!("trial equilibrium c = ({c1_star}, {c2_star}) not hyperbolic")));
    }
    let kappa = k2.sqrt();
    let mu = match side {
        LayerSide::Forward => -kappa,
        LayerSide::Backward => kappa,
    };
    let gap = phi_side - phi_star;
    // eigenvector (1/μ, 1, -f1/μ, -f2/μ); pick the branch heading toward phi_side
    let dphi = gap.signum() * opts.offset.min(1e-3 * gap.abs());
    let s = dphi * mu;
    let y0 = [phi_star + dphi, s, c1_star - fg.f1 * dphi, c2_star - fg.f2 * dphi];
    // forward layers are traced backward in ξ
    let dir = match side {
        LayerSide::Forward => -1.0,
        LayerSide::Backward => 1.0,
    };
    let rhs = |_: f64, y: &[f64], dy: &mut [f64]| {
        full_fast_rhs(y, q, ions, dy);
        for v in dy.iter_mut() {
            *v *= dir;
        }
    };
    let ode_opts = OdeOptions { rtol: opts.rtol, atol: opts.atol, h_init: 1e-3 / kappa, ..Default::default() };
    let horizon = 80.0 / kappa;
    let mut prev = (0.0, y0.to_vec());
    let mut crossed = None;
    ode::integrate(rhs, 0.0, &y0, horizon, &ode_opts, |t, y| {
        if !y.iter().all(|v| v.is_finite()) {
            return false;
        }
        if (y[0] - phi_side) * gap >= 0.0 {
            crossed = Some(t);
            return false;
        }
        prev = (t, y.to_vec());
        true
    })?;
    let t_cross = crossed.ok_or_else(|| Error::NoBracket {
        what: "layer trace".into(),
        lo: phi_star,
        hi: phi_side,
    })?;
    let (t_prev, y_prev) = prev;
    let advance = |tau: f64| -> Result<Vec<f64>> {
        if tau == 0.0 {
            return Ok(y_prev.clone());
        }
        Ok(ode::integrate(rhs, 0.0, &y_prev, tau, &ode_opts, |_, _| true)?.1)
    };
    let tau = roots::brent(
        |tau| advance(tau).map(|y| y[0] - phi_side).unwrap_or(f64::NAN),
        0.0,
        t_cross - t_prev,
        1e-15,
    )?;
    let y = advance(tau)?;
    Ok([y[0], y[1], y[2], y[3]])
}

/// Layer limits of the finite-`d` fast system for junction state `(phi_side, c1, c2)`.
pub fn shoot_finite(
    phi_side: f64,
    c1: f64,
    c2: f64,
    q: f64,
    side: LayerSide,
    ions: &IonPair,
    opts: &ShootingOptions,
) -> Result<FiniteLayer> {
    let t = layer_jump(c1, c2, q, ions)?;
    let mut x = [phi_side - t, c1 * (ions.z1 * t).exp()];
    if (phi_side - x[0]).abs() < 1e-12 && ions.d == 0.0 {
        return Ok(FiniteLayer { phi: phi_side, c1, c2, u: 0.0 });
    }
    let residual = |x: &[f64; 2]| -> Result<[f64; 2]> {
        let y = trace(x[0], x[1], phi_side, q, side, ions, opts)?;
        Ok([y[2] - c1, y[3] - c2])
    };
    let mut r = residual(&x)?;
    for _ in 0..40 {
        let norm = r[0].abs().max(r[1].abs());
        if norm < 1e-13 * (1.0 + c1.max(c2)) {
            break;
        }
        let mut jac = [[0.0; 2]; 2];
        for k in 0..2 {
            let h = 1e-7 * (1.0 + x[k].abs());
            let mut xp = x;
            xp[k] += h;
            let rp = residual(&xp)?;
            jac[0][k] = (rp[0] - r[0]) / h;
            jac[1][k] = (rp[1] - r[1]) / h;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::SingularJacobian { condition: f64::INFINITY });
        }
        let dx = [
            -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            -(jac[0][0] * r[1] - jac[1][0] * r[0]) / det,
        ];
        let mut step = 1.0;
        loop {
            let xn = [x[0] + step * dx[0], x[1] + step * dx[1]];
            if let Ok(rn) = residual(&xn) {
                if rn[0].abs().max(rn[1].abs()) < norm || step < 1e-3 {
                    x = xn;
                    r = rn;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-6 {
                return Err(Error::NoConvergence { iterations: 0, residual: norm });
            }
        }
    }
    let y = trace(x[0], x[1], phi_side, q, side, ions, opts)?;
    let c2_star = -(ions.z1 * x[1] + q) / ions.z2;
    Ok(FiniteLayer { phi: x[0], c1: x[1], c2: c2_star, u: y[1] })
}

/// Zeroth- and first-order layer limits by shooting.
pub fn shoot_layer(
    jv: &JunctionValues,
    q: f64,
    side: LayerSide,
    ions: &IonPair,
    opts: &ShootingOptions,
) -> Result<LayerLimit> {
    let at = |d: f64| {
        shoot_finite(
            jv.phi0 + d * jv.phi1,
            jv.c10 + d * jv.c11,
            jv.c20 + d * jv.c21,
            q,
            side,
            &ions.with_d(d),
            opts,
        )
    };
    let zero = at(0.0)?;
    let diff = |h: f64| -> Result<[f64; 4]> {
        let (p, m) = (at(h)?, at(-h)?);
        Ok([
            (p.phi - m.phi) / (2.0 * h),
            (p.c1 - m.c1) / (2.0 * h),
            (p.c2 - m.c2) / (2.0 * h),
            (p.u - m.u) / (2.0 * h),
        ])
    };
    let h = opts.d_step;
    let (big, small) = (diff(h)?, diff(0.5 * h)?);
    let first: Vec<f64> = big.iter().zip(&small).map(|(b, s)| (4.0 * s - b) / 3.0).collect();
    Ok(LayerLimit {
        phi0: zero.phi,
        phi1: first[0],
        c10: zero.c1,
        c11: first[1],
        c20: zero.c2,
        c21: first[2],
        u0: zero.u,
        u1: first[3],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::layer_limit;

    fn check(jv: JunctionValues, q: f64, side: LayerSide, ions: IonPair) {
        let shot = shoot_layer(&jv, q, side, &ions, &ShootingOptions::default()).unwrap();
        let closed = layer_limit(&jv, q, side, &ions).unwrap();
        let pairs = [
            ("phi0", shot.phi0, closed.phi0, 1e-9),
            ("c10", shot.c10, closed.c10, 1e-9),
            ("c20", shot.c20, closed.c20, 1e-9),
            ("u0", shot.u0, closed.u0, 1e-8),
            ("phi1", shot.phi1, closed.phi1, 1e-6),
            ("c11", shot.c11, closed.c11, 1e-6),
            ("c21", shot.c21, closed.c21, 1e-6),
            ("u1", shot.u1, closed.u1, 1e-6),
        ];
        for (name, a, b, tol) in pairs {
            assert!((a - b).abs() <= tol * (1.0 + b.abs()), "{name}: shooting {a} vs closed form {b}");
        }
    }

    #[test]
    fn unit_valence_neutral_junction() {
        let ions = IonPair { z1: 1.0, z2: -1.0, d: 0.0, lambda: 1.4 };
        let jv = JunctionValues { phi0: 0.3, phi1: 0.2, c10: 1.5, c11: -0.4, c20: 0.8, c21: 0.3 };
        check(jv, 0.0, LayerSide::Forward, ions);
        check(jv, 0.0, LayerSide::Backward, ions);
    }

    #[test]
    fn divalent_cation_charged_region() {
        let ions = IonPair { z1: 2.0, z2: -1.0, d: 0.0, lambda: 0.7 };
        let jv = JunctionValues { phi0: -0.2, phi1: 0.5, c10: 0.9, c11: 0.1, c20: 1.3, c21: -0.6 };
        check(jv, 1.0, LayerSide::Forward, ions);
        check(jv, -1.0, LayerSide::Backward, ions);
    }

    #[test]
    fn charge_that_reverses_the_velocity_sign() {
        let ions = IonPair { z1: 1.0, z2: -1.0, d: 0.0, lambda: 1.0 };
        let jv = JunctionValues { phi0: 0.0, phi1: 0.1, c10: 1.2, c11: 0.2, c20: 1.0, c21: 0.0 };
        check(jv, -1.0, LayerSide::Forward, ions);
        check(jv, 1.0, LayerSide::Backward, ions);
    }
}
