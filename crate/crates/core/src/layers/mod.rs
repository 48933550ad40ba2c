//! Boundary and internal layer limits at the junctions, through first order in `d`.
//!
//! A layer connects a junction state to a point of the slow manifold
//! `u = 0, z1 c1 + z2 c2 + Q = 0`. Along the zeroth-order orbit `c_j = c_j^side e^{z_j t}` where
//! `t = φ_side - φ_limit` solves `z1 c1 e^{z1 t} + z2 c2 e^{z2 t} + Q = 0`. The layer velocity is
//! written as `u0 = s t sqrt(2 e(t))` and `u1 = s G(t) / sqrt(2 e(t))`, which stays regular when
//! the layer vanishes (`t = 0`). The literal closed forms live in [`printed`].

pub mod fast;
pub mod printed;
pub mod shooting;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BoundaryData, IonPair};
use crate::numerics::roots;
use crate::numerics::special::{phi1, phi2};

/// Limits of one layer on the slow manifold, plus the junction-side velocity `u = ε φ'`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LayerLimit {
    pub phi0: f64,
    pub phi1: f64,
    pub c10: f64,
    pub c11: f64,
    pub c20: f64,
    pub c21: f64,
    pub u0: f64,
    pub u1: f64,
}

/// Potential and concentrations preassigned at a junction (or a bath), by order in `d`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JunctionValues {
    pub phi0: f64,
    pub phi1: f64,
    pub c10: f64,
    pub c11: f64,
    pub c20: f64,
    pub c21: f64,
}

impl JunctionValues {
    /// Zeroth-order values only.
    pub fn zeroth(phi0: f64, c10: f64, c20: f64) -> Self {
        Self { phi0, c10, c20, ..Default::default() }
    }
}

/// Which end of a slow region the layer sits at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerSide {
    /// Left end of a region (`x = 0`, `a+`, `b+`): the orbit reaches the slow manifold as `ξ → +∞`.
    Forward,
    /// Right end of a region (`a-`, `b-`, `x = 1`): the orbit leaves the slow manifold at `ξ → -∞`.
    Backward,
}

impl LayerSide {
    fn sign(self) -> f64 {
        match self {
            LayerSide::Forward => -1.0,
            LayerSide::Backward => 1.0,
        }
    }
}

/// Root `t` of `z1 c1 e^{z1 t} + z2 c2 e^{z2 t} + Q = 0`.
pub fn layer_jump(c1: f64, c2: f64, q: f64, ions: &IonPair) -> Result<f64> {
    let (z1, z2) = (ions.z1, ions.z2);
    if !(c1 > 0.0 && c2 > 0.0) {
        return Err(Error::InvalidLimits(format!("junction concentrations must be positive, got {c1}, {c2}")));
    }
    let t_neutral = (-z2 * c2 / (z1 * c1)).ln() / (z1 - z2);
    if q == 0.0 {
        return Ok(t_neutral);
    }
    // F is strictly increasing in t
    let f = |t: f64| {
        let (e1, e2) = ((z1 * t).exp(), (z2 * t).exp());
        (z1 * c1 * e1 + z2 * c2 * e2 + q, z1 * z1 * c1 * e1 + z2 * z2 * c2 * e2)
    };
    let mut delta = 1.0;
    let (mut lo, mut hi) = (t_neutral - delta, t_neutral + delta);
    for _ in 0..60 {
        if f(lo).0 <= 0.0 && f(hi).0 >= 0.0 {
            break;
        }
        delta *= 2.0;
        lo = t_neutral - delta;
        hi = t_neutral + delta;
    }
    roots::newton_bisect(f, lo, hi, 1e-15)
}

/// Layer limits from junction values for either side and any charge `q` of the adjacent region.
pub fn layer_limit(jv: &JunctionValues, q: f64, side: LayerSide, ions: &IonPair) -> Result<LayerLimit> {
    let all = [jv.phi0, jv.phi1, jv.c10, jv.c11, jv.c20, jv.c21, q];
    if all.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateLayer(format!("non-finite junction data {jv:?}, Q = {q}")));
    }
    let (z1, z2, lam) = (ions.z1, ions.z2, ions.lambda);
    let (c1, c2) = (jv.c10, jv.c20);
    let t = layer_jump(c1, c2, q, ions)?;
    let (x1, x2) = (z1 * t, z2 * t);
    let c10 = c1 * x1.exp();
    let c20 = c2 * x2.exp();
    let e = z1 * z1 * c1 * (phi1(x1) - phi2(x1)) + z2 * z2 * c2 * (phi1(x2) - phi2(x2));
    let root = (2.0 * e).sqrt();
    let s = side.sign();
    let u0 = s * t * root;

    let d1 = z1 * c1 * phi1(x1);
    let d2 = z2 * c2 * phi1(x2);
    let b1 = 2.0 * d1 + (lam + 1.0) * d2;
    let b2 = 2.0 * lam * d2 + (lam + 1.0) * d1;
    let dp = z1 * z1 * c10 + z2 * z2 * c20;
    let rho1 = z1 * jv.c11 + z2 * jv.c21;
    let shift = (rho1 + t * (z1 * z1 * jv.c11 * phi1(x1) + z2 * z2 * jv.c21 * phi1(x2))
        - t * (z1 * c10 * b1 + z2 * c20 * b2))
        / dp;
    let c11 = jv.c11 * x1.exp() - z1 * c10 * shift - t * c10 * b1;
    let c21 = jv.c21 * x2.exp() - z2 * c20 * shift - t * c20 * b2;
    let g = -((d1 + d2) * (c1 + lam * c2) + (c1 + c2) * (d1 + lam * d2) + t * (d1 + d2) * (d1 + lam * d2))
        - (jv.c11 * z1 * phi1(x1) + jv.c21 * z2 * phi1(x2))
        + (c10 * b1 + c20 * b2);
    let u1 = s * g / root;
    Ok(LayerLimit { phi0: jv.phi0 - t, phi1: jv.phi1 + shift, c10, c11, c20, c21, u0, u1 })
}

fn bath(phi: f64, c1: f64, c2: f64) -> JunctionValues {
    JunctionValues::zeroth(phi, c1, c2)
}

/// Boundary layer at `x = 0`.
pub fn left_outer_limit(bd: &BoundaryData, ions: &IonPair) -> Result<LayerLimit> {
    layer_limit(&bath(bd.v, bd.l1, bd.l2), 0.0, LayerSide::Forward, ions)
}

/// Internal layer on the left of `x = a`.
pub fn internal_limit_left_of_a(jv: &JunctionValues, ions: &IonPair) -> Result<LayerLimit> {
    layer_limit(jv, 0.0, LayerSide::Backward, ions)
}

/// Slow-manifold potential `φ0^{a,m}` (or `φ0^{b,m}`) reached from a junction into the charged region.
pub fn middle_phi0_root(jv: &JunctionValues, q: f64, ions: &IonPair) -> Result<f64> {
    Ok(jv.phi0 - layer_jump(jv.c10, jv.c20, q, ions)?)
}

/// Internal layer on the right of `x = a`, entering the charged region.
pub fn middle_entry_limit(jv: &JunctionValues, q: f64, ions: &IonPair) -> Result<LayerLimit> {
    layer_limit(jv, q, LayerSide::Forward, ions)
}

/// Internal layer on the left of `x = b`, leaving the charged region.
pub fn middle_exit_limit(jv: &JunctionValues, q: f64, ions: &IonPair) -> Result<LayerLimit> {
    layer_limit(jv, q, LayerSide::Backward, ions)
}

/// Internal layer on the right of `x = b`.
pub fn right_entry_limit(jv: &JunctionValues, ions: &IonPair) -> Result<LayerLimit> {
    layer_limit(jv, 0.0, LayerSide::Forward, ions)
}

/// Boundary layer at `x = 1`.
pub fn right_outer_limit(bd: &BoundaryData, ions: &IonPair) -> Result<LayerLimit> {
    layer_limit(&bath(0.0, bd.r1, bd.r2), 0.0, LayerSide::Backward, ions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ions(z1: f64, z2: f64, lambda: f64) -> IonPair {
        IonPair { z1, z2, d: 0.0, lambda }
    }

    #[test]
    fn neutral_bath_has_no_layer() {
        let bd = BoundaryData::symmetric(0.5, 2.0, 1.0);
        let l = left_outer_limit(&bd, &ions(1.0, -1.0, 1.7)).unwrap();
        assert_eq!((l.phi0, l.c10, l.c20, l.u0), (0.5, 2.0, 2.0, 0.0));
        let r = right_outer_limit(&bd, &ions(1.0, -1.0, 1.0)).unwrap();
        assert_eq!((r.phi0, r.c10, r.u0, r.phi1), (0.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn equal_sizes_and_neutral_bath_give_no_potential_correction() {
        let bd = BoundaryData::symmetric(0.0, 1.3, 0.7);
        assert_eq!(left_outer_limit(&bd, &ions(1.0, -1.0, 1.0)).unwrap().phi1, 0.0);
    }

    #[test]
    fn junction_already_on_the_slow_manifold() {
        let jv = JunctionValues::zeroth(0.3, 1.2, 1.2);
        let al = internal_limit_left_of_a(&jv, &ions(1.0, -1.0, 1.0)).unwrap();
        assert_eq!((al.phi0, al.c10, al.c20, al.u0, al.phi1), (0.3, 1.2, 1.2, 0.0, 0.0));
        let br = right_entry_limit(&jv, &ions(1.0, -1.0, 1.0)).unwrap();
        assert_eq!((br.phi0, br.u0, br.phi1), (0.3, 0.0, 0.0));
    }

    #[test]
    fn phi0_root_at_zero_charge_is_the_log_formula() {
        let ion = ions(1.0, -2.0, 1.0);
        let jv = JunctionValues::zeroth(0.4, 1.0, 0.7);
        let root = middle_phi0_root(&jv, 0.0, &ion).unwrap();
        assert_relative_eq!(root, 0.4 - (2.0 * 0.7f64 / 1.0).ln() / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn phi0_root_for_symmetric_valences_is_an_arcsinh() {
        let ion = ions(1.0, -1.0, 1.0);
        let (c, q, phia) = (0.8, 0.6, -0.2);
        let root = middle_phi0_root(&JunctionValues::zeroth(phia, c, c), q, &ion).unwrap();
        // 2c sinh(φa - φ0) = -Q
        assert_relative_eq!(root, phia + (q / (2.0 * c)).asinh(), max_relative = 1e-14);
    }

    #[test]
    fn phi0_root_matches_bisection() {
        let ion = ions(1.0, -2.0, 1.0);
        let jv = JunctionValues::zeroth(0.0, 1.0, 0.7);
        let q = 0.5;
        let f = |p: f64| (-p).exp() - 2.0 * 0.7 * (2.0 * p).exp() + q;
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = middle_phi0_root(&jv, q, &ion).unwrap();
        assert!((root - 0.5 * (lo + hi)).abs() < 1e-12);
        assert!(f(root).abs() < 1e-12);
    }

    #[test]
    fn entry_limit_at_zero_charge_equals_neutral_layer() {
        let ion = IonPair { lambda: 1.4, ..ions(1.0, -1.0, 1.0) };
        let jv = JunctionValues { phi0: 0.2, phi1: 0.1, c10: 1.3, c11: 0.4, c20: 0.9, c21: -0.2 };
        let m = middle_entry_limit(&jv, 0.0, &ion).unwrap();
        let n = right_entry_limit(&jv, &ion).unwrap();
        assert_eq!(m, n);
    }

    #[test]
    fn non_finite_data_is_a_degenerate_layer() {
        let jv = JunctionValues { phi1: f64::NAN, ..JunctionValues::zeroth(0.0, 1.0, 1.0) };
        assert!(matches!(
            middle_entry_limit(&jv, 0.1, &ions(1.0, -1.0, 1.0)),
            Err(Error::DegenerateLayer(_))
        ));
        assert!(matches!(
            layer_limit(&JunctionValues::zeroth(0.0, -1.0, 1.0), 0.0, LayerSide::Forward, &ions(1.0, -1.0, 1.0)),
            Err(Error::InvalidLimits(_))
        ));
    }

    #[test]
    fn small_charge_limits_approach_the_neutral_ones() {
        let ion = IonPair { lambda: 0.7, ..ions(1.0, -2.0, 1.0) };
        let jv = JunctionValues { phi0: 0.2, phi1: 0.3, c10: 1.1, c11: 0.2, c20: 0.8, c21: 0.5 };
        let a = middle_exit_limit(&jv, 1e-6, &ion).unwrap();
        let b = middle_exit_limit(&jv, 0.0, &ion).unwrap();
        for (x, y) in [(a.phi0, b.phi0), (a.c11, b.c11), (a.phi1, b.phi1), (a.u1, b.u1), (a.u0, b.u0)] {
            assert!((x - y).abs() < 1e-5, "{x} vs {y}");
        }
    }

    proptest! {
        #[test]
        fn limits_lie_on_the_slow_manifold(
            z1 in 1.0f64..3.0, z2 in -3.0f64..-1.0, lam in 0.3f64..3.0,
            c1 in 0.2f64..4.0, c2 in 0.2f64..4.0, q in -2.0f64..2.0,
            f in prop::array::uniform3(-2.0f64..2.0), forward in any::<bool>(),
        ) {
            let ion = IonPair { z1, z2, d: 0.0, lambda: lam };
            let jv = JunctionValues { phi0: 0.1, phi1: f[0], c10: c1, c11: f[1], c20: c2, c21: f[2] };
            let side = if forward { LayerSide::Forward } else { LayerSide::Backward };
            let l = layer_limit(&jv, q, side, &ion).unwrap();
            let scale = 1.0 + (z1 * l.c10).abs() + q.abs();
            prop_assert!((z1 * l.c10 + z2 * l.c20 + q).abs() < 1e-12 * scale);
            prop_assert!((z1 * l.c11 + z2 * l.c21).abs() < 1e-11 * (1.0 + (z1 * l.c11).abs()));
        }
    }
}
