//! Limiting fast systems and their first integrals.

use serde::{Deserialize, Serialize};

use crate::model::{eval_fg, IonPair};

/// State of the zeroth- and first-order limiting fast systems.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FastState {
    pub phi0: f64,
    pub u0: f64,
    pub c10: f64,
    pub c20: f64,
    pub phi1: f64,
    pub u1: f64,
    pub c11: f64,
    pub c21: f64,
}

impl FastState {
    pub fn to_array(&self) -> [f64; 8] {
        [self.phi0, self.u0, self.c10, self.c20, self.phi1, self.u1, self.c11, self.c21]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        Self { phi0: y[0], u0: y[1], c10: y[2], c20: y[3], phi1: y[4], u1: y[5], c11: y[6], c21: y[7] }
    }
}

/// Right-hand side of the zeroth/first-order fast system in a region with charge `q`.
pub fn fast_rhs(s: &FastState, q: f64, ions: &IonPair) -> FastState {
    let (z1, z2, lam) = (ions.z1, ions.z2, ions.lambda);
    FastState {
        phi0: s.u0,
        u0: -z1 * s.c10 - z2 * s.c20 - q,
        c10: -z1 * s.c10 * s.u0,
        c20: -z2 * s.c20 * s.u0,
        phi1: s.u1,
        u1: -z1 * s.c11 - z2 * s.c21,
        c11: -z1 * s.c11 * s.u0 - z1 * s.c10 * s.u1
            + (2.0 * z1 * s.c10 + (1.0 + lam) * z2 * s.c20) * s.c10 * s.u0,
        c21: -z2 * s.c21 * s.u0 - z2 * s.c20 * s.u1
            + ((1.0 + lam) * z1 * s.c10 + 2.0 * lam * z2 * s.c20) * s.c20 * s.u0,
    }
}

/// Right-hand side of the limiting fast system at finite `d`, state `(φ, u, c1, c2)`.
pub fn full_fast_rhs(y: &[f64], q: f64, ions: &IonPair, dy: &mut [f64]) {
    let fg = eval_fg(y[2], y[3], 0.0, 0.0, ions);
    dy[0] = y[1];
    dy[1] = -ions.z1 * y[2] - ions.z2 * y[3] - q;
    dy[2] = -fg.f1 * y[1];
    dy[3] = -fg.f2 * y[1];
}

/// Conserved quantities of the fast system (the fluxes and `τ` are trivially conserved and omitted).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstIntegrals {
    pub h10: f64,
    pub h20: f64,
    pub h50: f64,
    pub h11: f64,
    pub h21: f64,
    pub h31: f64,
}

impl FirstIntegrals {
    pub fn to_array(&self) -> [f64; 6] {
        [self.h10, self.h20, self.h50, self.h11, self.h21, self.h31]
    }
}

/// First integrals for a region with charge `q` (`q = 0` gives the neutral-region set).
pub fn first_integrals(s: &FastState, q: f64, ions: &IonPair) -> FirstIntegrals {
    let (z1, z2, lam) = (ions.z1, ions.z2, ions.lambda);
    FirstIntegrals {
        h10: (z1 * s.phi0).exp() * s.c10,
        h20: (z2 * s.phi0).exp() * s.c20,
        h50: s.c10 + s.c20 - 0.5 * s.u0 * s.u0 - q * s.phi0,
        h11: z1 * s.phi1 + s.c11 / s.c10 + 2.0 * s.c10 + (lam + 1.0) * s.c20,
        h21: z2 * s.phi1 + s.c21 / s.c20 + 2.0 * lam * s.c20 + (lam + 1.0) * s.c10,
        h31: s.u0 * s.u1 - s.c11 - s.c21 - (lam + 1.0) * s.c10 * s.c20 - s.c10 * s.c10 - lam * s.c20 * s.c20
            + s.phi1 * q,
    }
}

/// Magnitude of the largest term of each integral, used to normalize drift.
pub fn first_integral_scales(s: &FastState, q: f64, ions: &IonPair) -> [f64; 6] {
    let (z1, z2, lam) = (ions.z1, ions.z2, ions.lambda);
    let max = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    [
        ((z1 * s.phi0).exp() * s.c10).abs(),
        ((z2 * s.phi0).exp() * s.c20).abs(),
        max(&[s.c10, s.c20, 0.5 * s.u0 * s.u0, q * s.phi0]),
        max(&[z1 * s.phi1, s.c11 / s.c10, 2.0 * s.c10, (lam + 1.0) * s.c20]),
        max(&[z2 * s.phi1, s.c21 / s.c20, 2.0 * lam * s.c20, (lam + 1.0) * s.c10]),
        max(&[
            s.u0 * s.u1,
            s.c11,
            s.c21,
            (lam + 1.0) * s.c10 * s.c20,
            s.c10 * s.c10,
            lam * s.c20 * s.c20,
            s.phi1 * q,
        ]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn equilibrium_integrals_by_substitution() {
        let ion = IonPair { z1: 1.0, z2: -1.0, d: 0.0, lambda: 1.5 };
        let s = FastState { phi0: 0.0, u0: 0.0, c10: 1.2, c20: 1.2, phi1: 0.0, u1: 0.0, c11: 0.3, c21: 0.3 };
        let h = first_integrals(&s, 0.0, &ion);
        assert_eq!(h.h50, 2.4);
        assert_relative_eq!(h.h31, -0.6 - 2.5 * 1.44 - 1.44 - 1.5 * 1.44, max_relative = 1e-15);
    }

    #[test]
    fn charged_integrals_reduce_to_neutral_ones() {
        let ion = IonPair { z1: 2.0, z2: -1.0, d: 0.0, lambda: 0.8 };
        let s = FastState { phi0: 0.3, u0: 0.2, c10: 1.0, c20: 1.4, phi1: -0.1, u1: 0.5, c11: 0.2, c21: 0.7 };
        assert_eq!(first_integrals(&s, 0.0, &ion), first_integrals(&s, -0.0, &ion));
        let a = first_integrals(&s, 0.4, &ion);
        let b = first_integrals(&s, 0.0, &ion);
        assert_relative_eq!(a.h50 - b.h50, -0.4 * 0.3, max_relative = 1e-14);
        assert_relative_eq!(a.h31 - b.h31, -0.1 * 0.4, max_relative = 1e-13);
    }

    #[test]
    fn first_order_system_is_the_size_derivative_of_the_full_system() {
        let ion = IonPair { z1: 1.0, z2: -2.0, d: 0.0, lambda: 1.3 };
        let s = FastState { phi0: 0.1, u0: 0.4, c10: 1.1, c20: 0.6, phi1: 0.2, u1: -0.3, c11: 0.5, c21: -0.4 };
        let q = 0.2;
        let full = |d: f64| {
            let y = [s.phi0 + d * s.phi1, s.u0 + d * s.u1, s.c10 + d * s.c11, s.c20 + d * s.c21];
            let mut dy = [0.0; 4];
            full_fast_rhs(&y, q, &ion.with_d(d), &mut dy);
            dy
        };
        let h = 1e-5;
        let (p, m) = (full(h), full(-h));
        let r = fast_rhs(&s, q, &ion);
        let first = [r.phi1, r.u1, r.c11, r.c21];
        for k in 0..4 {
            assert_relative_eq!((p[k] - m[k]) / (2.0 * h), first[k], epsilon = 1e-8);
        }
    }
}
