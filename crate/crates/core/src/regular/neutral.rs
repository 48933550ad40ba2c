//! Outer solutions on the electroneutral regions `[0, a]` and `[b, 1]`.
//!
//! Both regions share one solver parameterized by the resistance coordinate
//! `θ = (H(x) - H(x_s)) / (H(x_e) - H(x_s))`, in which `c10` is affine. Every quotient
//! `(c_s - c_e) / (ln c_s - ln c_e)` goes through [`logmean`], so equal end concentrations
//! need no separate branch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ChannelGeometry;
use crate::layers::LayerLimit;
use crate::model::{FluxExpansion, IonPair};
use crate::numerics::special::{log_ratio_kernel, logmean};

/// Values of a regular layer at one end: `(φ0, c10, φ1, c11)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EndValues {
    pub phi0: f64,
    pub c10: f64,
    pub phi1: f64,
    pub c11: f64,
}

impl From<&LayerLimit> for EndValues {
    fn from(l: &LayerLimit) -> Self {
        Self { phi0: l.phi0, c10: l.c10, phi1: l.phi1, c11: l.c11 }
    }
}

/// Profiles at one point of a regular layer.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub phi0: f64,
    pub c10: f64,
    pub phi1: f64,
    pub c11: f64,
}

/// Zeroth- and first-order outer solution on an electroneutral interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeutralRegion {
    pub x_start: f64,
    pub x_end: f64,
    /// `H(x_s)` and `H(x_e) - H(x_s)`.
    pub h_start: f64,
    pub h_len: f64,
    pub start: EndValues,
    pub end: EndValues,
    pub fluxes: FluxExpansion,
    pub t0: f64,
    pub i0: f64,
    pub t1: f64,
    pub i1: f64,
    /// `c11_s - c11_e + κ (c10_e² - c10_s²)` with `κ = (λ z1 - z2)/z2`.
    pub m: f64,
    /// `I1 (H(x_e) - H(x_s)) / (z1 (z1 - z2))`.
    pub n: f64,
    ions: IonPair,
}

/// Outer solution on `[0, a]` between the limits of the layers at `x = 0` and `x = a⁻`.
pub type OuterSolutionLeft = NeutralRegion;
/// Outer solution on `[b, 1]` between the limits of the layers at `x = b⁺` and `x = 1`.
pub type OuterSolutionRight = NeutralRegion;

impl NeutralRegion {
    /// Solves the zeroth- and first-order slow system between two end states.
    pub fn new(
        start: EndValues,
        end: EndValues,
        x_range: (f64, f64),
        h_range: (f64, f64),
        ions: &IonPair,
    ) -> Result<Self> {
        let (cs, ce) = (start.c10, end.c10);
        if !(cs > 0.0 && ce > 0.0) {
            return Err(Error::InvalidLimits(format!("zeroth-order concentrations {cs}, {ce} must be positive")));
        }
        let (z1, z2, lam) = (ions.z1, ions.z2, ions.lambda);
        let dz = z1 - z2;
        let len = h_range.1 - h_range.0;
        let lm = logmean(cs, ce);
        let t0 = dz * (ce - cs) / (z2 * len);
        let i0 = z1 * dz * lm * (start.phi0 - end.phi0) / len;
        let kappa = (lam * z1 - z2) / z2;
        let m = start.c11 - end.c11 + kappa * (ce * ce - cs * cs);
        let t1 = -dz / (z2 * len) * m;
        let a = start.c11 - kappa * cs * cs;
        // ∫ c11 / (h c10²) over the whole region
        let k = len * (a / (cs * ce) - m * log_ratio_kernel(cs, ce) + kappa);
        let i1 = (i0 / (z1 * dz) * k + (1.0 - lam) * t0 * len / dz - (end.phi1 - start.phi1)) * z1 * dz * lm / len;
        let (j10, j20) = ions.fluxes_from_current(i0, t0);
        let (j11, j21) = ions.fluxes_from_current(i1, t1);
        Ok(Self {
            x_start: x_range.0,
            x_end: x_range.1,
            h_start: h_range.0,
            h_len: len,
            start,
            end,
            fluxes: FluxExpansion { j10, j20, j11, j21 },
            t0,
            i0,
            t1,
            i1,
            m,
            n: i1 * len / (z1 * dz),
            ions: *ions,
        })
    }

    /// Profiles at resistance coordinate `H(x)`.
    pub fn at_resistance(&self, hx: f64) -> ProfilePoint {
        let (z1, z2, lam) = (self.ions.z1, self.ions.z2, self.ions.lambda);
        let dz = z1 - z2;
        let len = self.h_len;
        let theta = (hx - self.h_start) / len;
        let (cs, ce) = (self.start.c10, self.end.c10);
        let c = (1.0 - theta) * cs + theta * ce;
        // ∫ 1/(h c10) from the start
        let inv = len * theta / logmean(c, cs);
        let phi0 = self.start.phi0 - self.i0 / (z1 * dz) * inv;
        let kappa = (lam * z1 - z2) / z2;
        let a = self.start.c11 - kappa * cs * cs;
        let c11 = a + kappa * c * c - self.m * theta;
        let k = len * (a * theta / (cs * c) + kappa * theta - self.m * theta * theta * log_ratio_kernel(cs, c));
        let phi1 = self.start.phi1 + self.i0 / (z1 * dz) * k + (1.0 - lam) * self.t0 / dz * len * theta
            - self.i1 / (z1 * dz) * inv;
        ProfilePoint { phi0, c10: c, phi1, c11 }
    }

    pub fn at(&self, x: f64, geom: &ChannelGeometry) -> ProfilePoint {
        self.at_resistance(geom.H(x))
    }
}

/// Outer solution on `[0, a]`.
pub fn outer_left(at_zero: &LayerLimit, at_a: &LayerLimit, geom: &ChannelGeometry, ions: &IonPair) -> Result<NeutralRegion> {
    NeutralRegion::new(at_zero.into(), at_a.into(), (0.0, geom.a()), (0.0, geom.h_a()), ions)
}

/// Outer solution on `[b, 1]`.
pub fn outer_right(at_b: &LayerLimit, at_one: &LayerLimit, geom: &ChannelGeometry, ions: &IonPair) -> Result<NeutralRegion> {
    NeutralRegion::new(at_b.into(), at_one.into(), (geom.b(), 1.0), (geom.h_b(), geom.h_1()), ions)
}

/// The four integrals `∫_0^x ds/(h c10)`, `∫_0^x c10/h ds`, `∫_0^x ds/(h c10²)` and
/// `∫_0^x H/(h c10²) ds` for the affine profile running from `c_l` at `x = 0` to `c_a` at `x = a`.
pub fn integral_identities_left(c_l: f64, c_a: f64, x: f64, geom: &ChannelGeometry) -> [f64; 4] {
    let ha = geom.h_a();
    let hx = geom.H(x);
    let theta = hx / ha;
    let c = (1.0 - theta) * c_l + theta * c_a;
    [
        hx / logmean(c, c_l),
        0.5 * hx * (c_l + c),
        hx / (c_l * c),
        hx * hx * log_ratio_kernel(c_l, c),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AreaProfile;
    use crate::numerics::quad;
    use approx::assert_relative_eq;

    fn ions() -> IonPair {
        IonPair { z1: 2.0, z2: -1.0, d: 0.0, lambda: 1.4 }
    }

    fn bump() -> ChannelGeometry {
        ChannelGeometry::new(AreaProfile::Bump { base: 1.0, depth: 0.5, center: 0.2, width: 0.1 }, 0.35, 0.65).unwrap()
    }

    fn generic() -> NeutralRegion {
        generic_on(&bump())
    }

    fn generic_on(g: &ChannelGeometry) -> NeutralRegion {
        let s = EndValues { phi0: 0.8, c10: 1.6, phi1: 0.2, c11: -0.3 };
        let e = EndValues { phi0: 0.1, c10: 0.7, phi1: -0.4, c11: 0.5 };
        outer_left(
            &LayerLimit { phi0: s.phi0, c10: s.c10, phi1: s.phi1, c11: s.c11, ..Default::default() },
            &LayerLimit { phi0: e.phi0, c10: e.c10, phi1: e.phi1, c11: e.c11, ..Default::default() },
            g,
            &ions(),
        )
        .unwrap()
    }

    #[test]
    fn equal_limits_carry_no_flux() {
        let l = LayerLimit { phi0: 0.3, c10: 1.2, ..Default::default() };
        let r = outer_left(&l, &l, &ChannelGeometry::uniform(0.3, 0.6).unwrap(), &ions()).unwrap();
        assert_eq!(r.fluxes.j10, 0.0);
        assert_eq!(r.fluxes.j20, 0.0);
        assert_eq!(r.at_resistance(0.1).c10, 1.2);
    }

    #[test]
    fn end_values_are_reproduced() {
        let r = generic();
        let g = bump();
        let p0 = r.at(0.0, &g);
        let pa = r.at(g.a(), &g);
        for (a, b) in [(p0.phi0, 0.8), (p0.c10, 1.6), (p0.phi1, 0.2), (p0.c11, -0.3)] {
            assert!((a - b).abs() < 1e-10);
        }
        for (a, b) in [(pa.phi0, 0.1), (pa.c10, 0.7), (pa.phi1, -0.4), (pa.c11, 0.5)] {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn combinations_recomputed_from_fluxes_match() {
        let r = generic();
        let ion = ions();
        assert_relative_eq!(r.fluxes.i0(&ion), r.i0, max_relative = 1e-12);
        assert_relative_eq!(r.fluxes.t0(), r.t0, max_relative = 1e-12);
        assert_relative_eq!(r.fluxes.i1(&ion), r.i1, max_relative = 1e-12);
        assert_relative_eq!(r.fluxes.t1(), r.t1, max_relative = 1e-12);
    }

    #[test]
    fn profiles_satisfy_the_slow_system() {
        // residual of the zeroth- and first-order slow ODEs under central differences in x
        let smooth = AreaProfile::Bump { base: 1.0, depth: 0.4, center: 0.2, width: 0.3 };
        for g in [ChannelGeometry::uniform(0.35, 0.65).unwrap(), ChannelGeometry::new(smooth, 0.35, 0.65).unwrap()] {
            check_slow_residual(&generic_on(&g), &g);
        }
    }

    fn check_slow_residual(r: &NeutralRegion, g: &ChannelGeometry) {
        let ion = ions();
        let (z1, z2, lam) = (ion.z1, ion.z2, ion.lambda);
        let dz = z1 - z2;
        let h = 1e-3;
        for &x in &[0.05, 0.12, 0.2, 0.3] {
            let p: Vec<ProfilePoint> = [-2.0, -1.0, 1.0, 2.0].iter().map(|k| r.at(x + k * h, g)).collect();
            let c = r.at(x, g);
            let hx = g.h(x);
            let d = |f: fn(&ProfilePoint) -> f64| (f(&p[0]) - 8.0 * f(&p[1]) + 8.0 * f(&p[2]) - f(&p[3])) / (12.0 * h);
            let res = [
                d(|v| v.phi0) + r.i0 / (z1 * dz * hx * c.c10),
                d(|v| v.c10) - z2 * r.t0 / (dz * hx),
                d(|v| v.phi1)
                    - (r.i0 * c.c11 / (z1 * dz * hx * c.c10 * c.c10)
                        + ((1.0 - lam) * z1 * r.t0 * c.c10 - r.i1) / (z1 * dz * hx * c.c10)),
                d(|v| v.c11) - (2.0 * (lam * z1 - z2) * r.t0 * c.c10 + z2 * r.t1) / (dz * hx),
            ];
            for v in res {
                assert!(v.abs() < 1e-8, "residual {v} at x = {x}");
            }
        }
    }

    #[test]
    fn constant_profile_integral_is_linear_in_resistance() {
        let g = ChannelGeometry::uniform(0.4, 0.7).unwrap();
        let v = integral_identities_left(1.3, 1.3, 0.25, &g);
        assert_relative_eq!(v[0], 0.25 / 1.3, max_relative = 1e-15);
    }

    #[test]
    fn integrals_vanish_at_the_origin() {
        assert_eq!(integral_identities_left(1.3, 0.4, 0.0, &bump()), [0.0; 4]);
    }

    #[test]
    fn integral_identities_match_quadrature() {
        for g in [ChannelGeometry::uniform(0.35, 0.65).unwrap(), bump()] {
            let (cl, ca) = (1.7, 0.6);
            let c = |s: f64| cl + (ca - cl) * g.H(s) / g.h_a();
            for &x in &[0.1, 0.25, 0.35] {
                let v = integral_identities_left(cl, ca, x, &g);
                let q = [
                    quad::adaptive(|s| 1.0 / (g.h(s) * c(s)), 0.0, x, 1e-14, 1e-12),
                    quad::adaptive(|s| c(s) / g.h(s), 0.0, x, 1e-14, 1e-12),
                    quad::adaptive(|s| 1.0 / (g.h(s) * c(s) * c(s)), 0.0, x, 1e-14, 1e-12),
                    quad::adaptive(|s| g.H(s) / (g.h(s) * c(s) * c(s)), 0.0, x, 1e-14, 1e-12),
                ];
                for k in 0..4 {
                    assert!((v[k] - q[k]).abs() < 1e-9 * (1.0 + q[k].abs()), "integral {k} at {x}");
                }
            }
        }
    }

    #[test]
    fn invalid_limits_are_rejected() {
        let l = LayerLimit { c10: 1.0, ..Default::default() };
        let bad = LayerLimit { c10: -0.1, ..Default::default() };
        assert!(matches!(
            outer_left(&l, &bad, &ChannelGeometry::uniform(0.3, 0.6).unwrap(), &ions()),
            Err(Error::InvalidLimits(_))
        ));
    }
}
