//! Layer limits transcribed term by term from their published closed forms.
//!
//! Kept as a reference to compare against [`super::layer_limit`]. Two velocity signs differ from
//! the fast dynamics: the entry layer into the charged region uses `sgn(z1 c10 + z2 c20)` without
//! `Q`, and the right entry layer at `b` carries a minus sign. The first-order velocities divide by
//! `u0`; when `u0 = 0` they return 0 if the numerator vanishes and `DegenerateLayer` otherwise.

use super::{JunctionValues, LayerLimit};
use crate::error::{Error, Result};
use crate::model::{sigma, w_combination, BoundaryData, IonPair};
use crate::numerics::special::sgn;

fn neutral_product(c1: f64, c2: f64, ions: &IonPair) -> f64 {
    let (z1, z2) = (ions.z1, ions.z2);
    let dz = z1 - z2;
    (z1 * c1).powf(-z2 / dz) * (-z2 * c2).powf(z1 / dz)
}

fn velocity_ratio(num: f64, u0: f64, scale: f64) -> Result<f64> {
    if u0 != 0.0 {
        Ok(num / u0)
    } else if num.abs() <= 1e-12 * scale.max(1.0) {
        Ok(0.0)
    } else {
        Err(Error::DegenerateLayer(format!("u0 = 0 with first-order numerator {num:.3e}")))
    }
}

fn pair_energy(c1: f64, c2: f64, lam: f64) -> f64 {
    (c1 + c2) * (c1 + lam * c2)
}

/// Layer between a bath and the neutral slow manifold; `sign` is `+1` at `x = 0`, `-1` at `x = 1`.
fn bath_layer(phi: f64, c1: f64, c2: f64, sign: f64, ions: &IonPair) -> Result<LayerLimit> {
    let (z1, z2, lam) = (ions.z1, ions.z2, ions.lambda);
    let dz = z1 - z2;
    let p = neutral_product(c1, c2, ions);
    let c10 = p / z1;
    let c20 = -p / z2;
    let phi0 = phi - (-z2 * c2 / (z1 * c1)).ln() / dz;
    let u0 = sign * sgn(z1 * c1 + z2 * c2) * (2.0 * (c1 + c2 + dz / (z1 * z2) * p)).max(0.0).sqrt();
    let phi1 = (1.0 - lam) / dz * (c1 + c2 - c10 - c20);
    let c11 = c10 * (w_combination(c1, c2, ions) + 2.0 * (lam * z1 - z2) / z2 * c10);
    let c21 = -z1 * c11 / z2;
    let a = pair_energy(c1, c2, lam);
    let b = pair_energy(c10, c20, lam);
    let u1 = velocity_ratio(a - b - c11 - c21, u0, a)?;
    Ok(LayerLimit { phi0, phi1, c10, c11, c20, c21, u0, u1 })
}

/// Layer between a junction and the neutral slow manifold; `sign` multiplies `-sgn(z1 c1 + z2 c2)`.
fn junction_layer(jv: &JunctionValues, ions: &IonPair) -> Result<LayerLimit> {
    let (z1, z2, lam) = (ions.z1, ions.z2, ions.lambda);
    let dz = z1 - z2;
    let (c1, c2) = (jv.c10, jv.c20);
    let p = neutral_product(c1, c2, ions);
    let c10 = p / z1;
    let c20 = -p / z2;
    let phi0 = jv.phi0 - (-z2 * c2 / (z1 * c1)).ln() / dz;
    let u0 = -sgn(z1 * c1 + z2 * c2) * (2.0 * (c1 + c2 + dz / (z1 * z2) * p)).max(0.0).sqrt();
    let r1 = jv.c11 / c1;
    let r2 = jv.c21 / c2;
    let phi1 = jv.phi1 + (r1 - r2 + (1.0 - lam) * (c1 + c2 - c10 - c20)) / dz;
    let c11 = c10 * ((z1 * r2 - z2 * r1) / dz + w_combination(c1, c2, ions) + 2.0 * (lam * z1 - z2) / z2 * c10);
    let c21 = -z1 * c11 / z2;
    let a = pair_energy(c1, c2, lam);
    let num = a - pair_energy(c10, c20, lam) + jv.c11 + jv.c21 - c11 - c21;
    let u1 = velocity_ratio(num, u0, a)?;
    Ok(LayerLimit { phi0, phi1, c10, c11, c20, c21, u0, u1 })
}

/// Layer between a junction and the charged slow manifold; `sign` is `+1` at `a`, `-1` at `b`.
fn charged_layer(jv: &JunctionValues, q: f64, sign: f64, ions: &IonPair) -> Result<LayerLimit> {
    let (z1, z2, lam) = (ions.z1, ions.z2, ions.lambda);
    let dz = z1 - z2;
    let (c1, c2) = (jv.c10, jv.c20);
    let phi0 = super::middle_phi0_root(jv, q, ions)?;
    let jump = jv.phi0 - phi0;
    let c10 = c1 * (z1 * jump).exp();
    let c20 = c2 * (z2 * jump).exp();
    let energy = c1 - c10 + c2 - c20 - q * jump;
    let u0 = sign * sgn(z1 * c1 + z2 * c2) * (2.0 * energy).max(0.0).sqrt();
    let sg = sigma(c10, q, ions);
    let r1 = jv.c11 / c1;
    let r2 = jv.c21 / c2;
    let phi1 = jv.phi1 + z1 * c10 / sg * (r1 - r2 + (1.0 - lam) * (c1 + c2 - c10 - c20))
        - (r2 + 2.0 * lam * c2 + (lam + 1.0) * c1 - 2.0 * lam * c20 - (lam + 1.0) * c10) * q / sg;
    let z1c11 = z1 * c10 / sg
        * (z1 * c10 + q)
        * (z1 * r2 - z2 * r1
            + dz * w_combination(c1, c2, ions)
            + ((2.0 * (lam * z1 - z2) + (1.0 - lam) * z2) * q + 2.0 * (lam * z1 - z2) * dz * c10) / z2);
    let c11 = z1c11 / z1;
    let c21 = -z1c11 / z2;
    let a = pair_energy(c1, c2, lam);
    let num = a - pair_energy(c10, c20, lam) + jv.c11 + jv.c21 - c11 - c21 + (phi1 - jv.phi1) * q;
    let u1 = velocity_ratio(num, u0, a)?;
    Ok(LayerLimit { phi0, phi1, c10, c11, c20, c21, u0, u1 })
}

pub fn left_outer_limit(bd: &BoundaryData, ions: &IonPair) -> Result<LayerLimit> {
    bath_layer(bd.v, bd.l1, bd.l2, 1.0, ions)
}

pub fn internal_limit_left_of_a(jv: &JunctionValues, ions: &IonPair) -> Result<LayerLimit> {
    junction_layer(jv, ions)
}

pub fn middle_entry_limit(jv: &JunctionValues, q: f64, ions: &IonPair) -> Result<LayerLimit> {
    charged_layer(jv, q, 1.0, ions)
}

pub fn middle_exit_limit(jv: &JunctionValues, q: f64, ions: &IonPair) -> Result<LayerLimit> {
    charged_layer(jv, q, -1.0, ions)
}

pub fn right_entry_limit(jv: &JunctionValues, ions: &IonPair) -> Result<LayerLimit> {
    junction_layer(jv, ions)
}

pub fn right_outer_limit(bd: &BoundaryData, ions: &IonPair) -> Result<LayerLimit> {
    bath_layer(0.0, bd.r1, bd.r2, -1.0, ions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn close(a: &LayerLimit, b: &LayerLimit, tol: f64) -> bool {
        let pa = [a.phi0, a.phi1, a.c10, a.c11, a.c20, a.c21, a.u0, a.u1];
        let pb = [b.phi0, b.phi1, b.c10, b.c11, b.c20, b.c21, b.u0, b.u1];
        pa.iter().zip(&pb).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
    }

    #[test]
    fn printed_bath_layers_match_the_robust_form() {
        let ion = IonPair { z1: 1.0, z2: -2.0, d: 0.0, lambda: 1.6 };
        let bd = BoundaryData { v: 0.7, l1: 1.0, l2: 1.0, r1: 0.4, r2: 0.9 };
        let a = left_outer_limit(&bd, &ion).unwrap();
        let b = layers::left_outer_limit(&bd, &ion).unwrap();
        assert!(close(&a, &b, 1e-12), "{a:?}\n{b:?}");
        let a = right_outer_limit(&bd, &ion).unwrap();
        let b = layers::right_outer_limit(&bd, &ion).unwrap();
        assert!(close(&a, &b, 1e-12), "{a:?}\n{b:?}");
    }

    #[test]
    fn neutral_bath_first_order_concentration_vanishes_for_unit_valences() {
        let ion = IonPair { z1: 1.0, z2: -1.0, d: 0.0, lambda: 2.3 };
        let l = left_outer_limit(&BoundaryData::symmetric(0.0, 1.7, 1.0), &ion).unwrap();
        assert_relative_eq!(l.c11, 0.0, epsilon = 1e-14);
        assert_eq!(l.u1, 0.0);
    }

    #[test]
    fn printed_right_entry_velocity_has_the_opposite_sign() {
        let ion = IonPair { z1: 1.0, z2: -1.0, d: 0.0, lambda: 1.0 };
        let jv = JunctionValues::zeroth(0.1, 1.5, 0.8);
        let printed = right_entry_limit(&jv, &ion).unwrap();
        let robust = layers::right_entry_limit(&jv, &ion).unwrap();
        assert_relative_eq!(printed.u0, -robust.u0, max_relative = 1e-13);
        assert_relative_eq!(printed.phi1, robust.phi1, max_relative = 1e-13);
        assert_relative_eq!(printed.c11, robust.c11, max_relative = 1e-12);
    }

    #[test]
    fn printed_entry_velocity_ignores_the_permanent_charge() {
        // z1 c1 + z2 c2 = 0.2 > 0 but adding Q = -1 makes the net charge negative
        let ion = IonPair { z1: 1.0, z2: -1.0, d: 0.0, lambda: 1.0 };
        let jv = JunctionValues::zeroth(0.0, 1.2, 1.0);
        let printed = middle_entry_limit(&jv, -1.0, &ion).unwrap();
        let robust = layers::middle_entry_limit(&jv, -1.0, &ion).unwrap();
        assert!(printed.u0 > 0.0 && robust.u0 < 0.0);
        assert_relative_eq!(printed.u0.abs(), robust.u0.abs(), max_relative = 1e-12);
    }

    #[test]
    fn degenerate_layer_when_velocity_vanishes_with_nonzero_numerator() {
        let ion = IonPair { z1: 1.0, z2: -1.0, d: 0.0, lambda: 1.0 };
        // neutral junction: the printed sign is zero although Q drives a layer
        let jv = JunctionValues { phi0: 0.0, phi1: 0.0, c10: 1.0, c11: 0.5, c20: 1.0, c21: 0.0 };
        assert!(matches!(middle_entry_limit(&jv, 0.5, &ion), Err(Error::DegenerateLayer(_))));
        let robust = layers::middle_entry_limit(&jv, 0.5, &ion).unwrap();
        assert!(robust.u0 != 0.0 && robust.u1.is_finite());
    }

    #[test]
    fn neutral_junction_numerator_vanishes_without_a_jump() {
        let ion = IonPair { z1: 1.0, z2: -1.0, d: 0.0, lambda: 1.0 };
        let jv = JunctionValues { phi0: 0.0, phi1: 0.0, c10: 1.0, c11: 0.5, c20: 1.0, c21: 0.0 };
        assert_eq!(internal_limit_left_of_a(&jv, &ion).unwrap().u1, 0.0);
    }

    proptest! {
        #[test]
        fn printed_and_robust_agree_up_to_the_sign_conventions(
            z1 in 1.0f64..3.0, z2 in -3.0f64..-1.0, lam in 0.3f64..3.0,
            c1 in 0.2f64..4.0, c2 in 0.2f64..4.0, q in -2.0f64..2.0,
            f in prop::array::uniform3(-2.0f64..2.0),
        ) {
            let ion = IonPair { z1, z2, d: 0.0, lambda: lam };
            let jv = JunctionValues { phi0: 0.1, phi1: f[0], c10: c1, c11: f[1], c20: c2, c21: f[2] };
            prop_assume!((z1 * c1 + z2 * c2).abs() > 1e-3 && (z1 * c1 + z2 * c2 + q).abs() > 1e-3);
            let a = internal_limit_left_of_a(&jv, &ion).unwrap();
            let b = layers::internal_limit_left_of_a(&jv, &ion).unwrap();
            prop_assert!(close(&a, &b, 1e-9), "{:?}\n{:?}", a, b);
            // exit layer at b: same velocity sign convention in both forms when Q does not flip it
            let a = middle_exit_limit(&jv, q, &ion).unwrap();
            let b = layers::middle_exit_limit(&jv, q, &ion).unwrap();
            let agree = sgn(z1 * c1 + z2 * c2) == sgn(z1 * c1 + z2 * c2 + q);
            let a_fixed = LayerLimit { u0: if agree { a.u0 } else { -a.u0 }, u1: if agree { a.u1 } else { -a.u1 }, ..a };
            prop_assert!(close(&a_fixed, &b, 1e-9), "{:?}\n{:?}", a, b);
        }
    }
}
