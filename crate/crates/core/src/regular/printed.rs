//! Regular-layer solutions transcribed term by term from their published closed forms.
//!
//! These take the raw bath and junction data alongside the layer limits, because the `N` and
//! `P` functions are written with `w(·,·)` of those values. They are a reference for
//! [`super::neutral`] and [`super::middle`] and are not used by the matching solver.
//! Known discrepancy: the right-region potential profile carries an extra factor `z1 (z1 - z2)`
//! in front of its logarithm, so it only reaches `φ0^r` at `x = 1` when `z1 (z1 - z2) = 1`.

use super::middle::MiddleZeroth;
use super::neutral::{EndValues, ProfilePoint};
use crate::geometry::ChannelGeometry;
use crate::layers::{JunctionValues, LayerLimit};
use crate::model::{w_combination, BoundaryData, FluxExpansion, IonPair};

/// Printed neutral-region solution: fluxes, `M`, `N` and the profile coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PrintedNeutral {
    pub fluxes: FluxExpansion,
    pub m: f64,
    pub n: f64,
    start: EndValues,
    end: EndValues,
    /// Coefficient of `(c_s - c10(x)) / c10(x)` in `P(x)`.
    p_coeff: f64,
    right_region: bool,
    h_start: f64,
    h_len: f64,
    ions: IonPair,
}

fn junction_ratio_term(jv: &JunctionValues, ions: &IonPair) -> f64 {
    (ions.z1 * jv.c21 / jv.c20 - ions.z2 * jv.c11 / jv.c10) / (ions.z1 - ions.z2)
}

fn zeroth_fluxes(s: &EndValues, e: &EndValues, len: f64, ions: &IonPair) -> (f64, f64) {
    let (z1, z2) = (ions.z1, ions.z2);
    let dln = s.c10.ln() - e.c10.ln();
    let dphi = s.phi0 - e.phi0;
    let j10 = (s.c10 - e.c10) / len * (1.0 + z1 * dphi / dln);
    let j20 = -z1 * (s.c10 - e.c10) / (z2 * len) * (1.0 + z2 * dphi / dln);
    (j10, j20)
}

/// Outer solution on `[0, a]` from the bath data `(l1, l2)` and the junction values at `a`.
pub fn outer_left(
    at_zero: &LayerLimit,
    at_a: &LayerLimit,
    bd: &BoundaryData,
    jv_a: &JunctionValues,
    geom: &ChannelGeometry,
    ions: &IonPair,
) -> PrintedNeutral {
    let (z1, z2, lam) = (ions.z1, ions.z2, ions.lambda);
    let s = EndValues::from(at_zero);
    let e = EndValues::from(at_a);
    let ha = geom.h_a();
    let kappa = (lam * z1 - z2) / z2;
    let (cs, ce) = (s.c10, e.c10);
    let dln = cs.ln() - ce.ln();
    let dphi = s.phi0 - e.phi0;
    let (j10, j20) = zeroth_fluxes(&s, &e, ha, ions);
    let m0 = s.c11 - e.c11 + kappa * (ce * ce - cs * cs);
    let wl = w_combination(bd.l1, bd.l2, ions);
    let wa = w_combination(jv_a.c10, jv_a.c20, ions);
    let n0 = (cs - ce) / dln
        * ((s.phi1 - e.phi1) - (1.0 - lam) / z2 * (cs - ce) + dphi / (cs - ce) * m0 - (wl - wa) / dln * dphi
            + dphi / dln * junction_ratio_term(jv_a, ions));
    let j11 = (m0 + z1 * n0) / ha;
    let j21 = -z1 / z2 * (m0 + z2 * n0) / ha;
    PrintedNeutral {
        fluxes: FluxExpansion { j10, j20, j11, j21 },
        m: m0,
        n: n0,
        start: s,
        end: e,
        p_coeff: wl + kappa * cs,
        right_region: false,
        h_start: 0.0,
        h_len: ha,
        ions: *ions,
    }
}

/// Outer solution on `[b, 1]` from the junction values at `b` and the bath data `(r1, r2)`.
pub fn outer_right(
    at_b: &LayerLimit,
    at_one: &LayerLimit,
    bd: &BoundaryData,
    jv_b: &JunctionValues,
    geom: &ChannelGeometry,
    ions: &IonPair,
) -> PrintedNeutral {
    let (z1, z2, lam) = (ions.z1, ions.z2, ions.lambda);
    let s = EndValues::from(at_b);
    let e = EndValues::from(at_one);
    let len = geom.h_1() - geom.h_b();
    let kappa = (lam * z1 - z2) / z2;
    let (cs, ce) = (s.c10, e.c10);
    let dln = cs.ln() - ce.ln();
    let dphi = s.phi0 - e.phi0;
    let (j10, j20) = zeroth_fluxes(&s, &e, len, ions);
    let m2 = s.c11 - e.c11 + kappa * (ce * ce - cs * cs);
    let wb = w_combination(jv_b.c10, jv_b.c20, ions);
    let wr = w_combination(bd.r1, bd.r2, ions);
    let jt = junction_ratio_term(jv_b, ions);
    let n2 = (cs - ce) / dln
        * ((s.phi1 - e.phi1) - (1.0 - lam) / z2 * (cs - ce) + dphi / (cs - ce) * m2 - (wb - wr) / dln * dphi
            - dphi / dln * jt);
    let j11 = (m2 + z1 * n2) / len;
    let j21 = -z1 / z2 * (m2 + z2 * n2) / len;
    PrintedNeutral {
        fluxes: FluxExpansion { j10, j20, j11, j21 },
        m: m2,
        n: n2,
        start: s,
        end: e,
        p_coeff: jt + wb + kappa * cs,
        right_region: true,
        h_start: geom.h_b(),
        h_len: len,
        ions: *ions,
    }
}

impl PrintedNeutral {
    /// `P(x)` at resistance coordinate `H(x)`.
    pub fn p_function(&self, hx: f64) -> f64 {
        let (z1, z2, lam) = (self.ions.z1, self.ions.z2, self.ions.lambda);
        let kappa = (lam * z1 - z2) / z2;
        let (cs, ce) = (self.start.c10, self.end.c10);
        let theta = (hx - self.h_start) / self.h_len;
        let c = (1.0 - theta) * cs + theta * ce;
        self.p_coeff * (cs - c) / c + kappa * (cs - ce) * theta - self.m * theta / c
            + self.m * (cs.ln() - c.ln()) / (cs - ce)
    }

    pub fn at_resistance(&self, hx: f64) -> ProfilePoint {
        let (z1, z2, lam) = (self.ions.z1, self.ions.z2, self.ions.lambda);
        let kappa = (lam * z1 - z2) / z2;
        let (s, e) = (&self.start, &self.end);
        let (cs, ce) = (s.c10, e.c10);
        let theta = (hx - self.h_start) / self.h_len;
        let c = (1.0 - theta) * cs + theta * ce;
        let dln = cs.ln() - ce.ln();
        let dphi = s.phi0 - e.phi0;
        let phi0 = if self.right_region {
            s.phi0 - z1 * (z1 - z2) * dphi / dln * (cs.ln() - c.ln())
        } else {
            s.phi0 + (e.phi0 - s.phi0) / (ce.ln() - cs.ln()) * (1.0 - theta + theta * ce / cs).ln()
        };
        let phi1 = s.phi1 - (1.0 - lam) * (cs - ce) * theta / z2 + dphi / dln * self.p_function(hx)
            - (cs.ln() - c.ln()) / (cs - ce) * self.n;
        let c11 = s.c11 + kappa * (c * c - cs * cs) - theta * self.m;
        ProfilePoint { phi0, c10: c, phi1, c11 }
    }
}

/// Transcribed first-order middle profiles `(φ1(y), c11(y))` for given `T1 = J11 + J21`, `J11`.
pub fn middle_first(z: &MiddleZeroth, phi1_am: f64, c11_am: f64, j11: f64, j21: f64, y: f64) -> (f64, f64) {
    let ions = &z.ions;
    let (z1, z2, lam) = (ions.z1, ions.z2, ions.lambda);
    let dz = z1 - z2;
    let (q, t0, j10, i0, l0) = (z.q, z.t0, z.j10, z.i0, z.lambda0);
    let (i1, t1, _) = ions.combinations(j11, j21);
    let s = z.s_integrals(y);
    let c = z.c10(y);
    let cam = z.c_am;
    let ek = (z.k * y).exp();
    let sg = z.sigma(y);
    let den = z1 * t0 * cam + j10 * q;
    let kap = (lam * z1 - z2) / z2;
    let phi1 = phi1_am + (lam - 1.0) / (z2 * z2 * t0) * (dz * j10 + i0) * (c - cam) - i1 * y
        + dz * i0 / (z2 * t0 * sg)
            * (z1 * t0 * (c - cam) * c11_am / den - kap * (c * c - cam * cam) - z1 * z2 * t1 * (s.s1 - ek * s.s3)
                + 2.0 * z1 * dz * t0 * ek * s.s4
                - 2.0 * z1 * l0 * q * s.s1
                - z2 * j11 * y * q
                + j11 * (c - cam) / den * q
                + 2.0 * dz * j10 * ek * q * s.s3)
        + 2.0 * dz * l0 / (z2 * t0) * j10 * y * q;
    let g = 2.0 * lam * z1 * t0 + 2.0 * dz * j10;
    let c11 = c11_am + z1 * z2 * t1 * s.s1 + 2.0 * z1 * (lam * z1 - z2) * t0 * s.s2 + z2 * j11 * q * y + g * s.s1 * q
        + i0 / (t0 * sg)
            * (z1 * t0 * (cam - c) * c11_am * q / den + 2.0 * z1 * (lam * z1 - z2) * t0 * q * s.s2
                + z1 * z2 * t1 * q * (s.s1 - ek * s.s3)
                - 2.0 * z1 * dz * t0 * ek * q * s.s4
                + g * q * q * s.s1
                + z2 * j11 * y * q * q
                + j11 / (z1 * t0) * (1.0 - ek) * q * q
                - 2.0 * dz * j10 * ek * q * q * s.s3);
    (phi1, c11)
}

/// Left side minus right side of the printed `T1` consistency relation at `y*`.
pub fn t1_relation_residual(
    z: &MiddleZeroth,
    y_star: f64,
    c11_am: f64,
    phi1_am: f64,
    bm: &EndValues,
    t1: f64,
) -> f64 {
    let ions = &z.ions;
    let (z1, z2, lam) = (ions.z1, ions.z2, ions.lambda);
    let dz = z1 - z2;
    let (q, t0, j10, i0, l0) = (z.q, z.t0, z.j10, z.i0, z.lambda0);
    let s = z.s_integrals(y_star);
    let lhs = t1 / t0 * (bm.c10 - z.c_am) - t1 / (dz * t0) * z2 * y_star * i0 * q;
    let rhs = bm.c11 - c11_am - 2.0 * (lam * z1 - z2) * z1 * t0 * s.s2
        - ((2.0 * lam + (1.0 - lam) * z2 / dz) * z1 * t0 + 2.0 * dz * j10) * s.s1 * q
        + z2 * (bm.phi1 - phi1_am) * q / dz
        + 2.0 * (1.0 - lam) * z1 * s.s5 * q
        - 2.0 * lam * s.sz * q * q
        - 2.0 * (1.0 - lam) * z2 / dz * s.sz * q * q
        - 2.0 * lam * z2 * t0 * y_star / dz * q * q
        + z2 / dz * l0 * y_star * q * q;
    lhs - rhs
}
