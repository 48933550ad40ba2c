//! Outer solution on the charged region `[a, b]`, in the stretched variable `y` with
//! `dτ/dy = h(τ) σ(τ)`.
//!
//! Zeroth order is exponential-affine in `y`. It is written with `(e^x - 1)/x` kernels so
//! that `T0 -> 0` is regular. First order uses the integrating factor `e^{-ky} σ(y)` for
//! `c11` and composite Gauss-Legendre quadrature for `φ1`. Neither has a `1/T0` or `1/Q` factor.

use serde::{Deserialize, Serialize};

use super::neutral::EndValues;
use crate::error::{Error, Result};
use crate::geometry::ChannelGeometry;
use crate::layers::LayerLimit;
use crate::model::{FluxExpansion, IonPair};
use crate::numerics::quad::{self, GaussLegendre};
use crate::numerics::roots;
use crate::numerics::special::{phi1, phi2};

/// Below this `|k y|` the printed `1/T0` forms of `S2`, `S4`, `S5` lose digits and quadrature is used.
const SMALL_KY: f64 = 1e-2;

/// Zeroth-order solution `φ0(y) = φ0^{a,m} - I0 y`, `c10(y) = C e^{ky} + β0 y (e^{ky} - 1)/(ky)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiddleZeroth {
    pub q: f64,
    pub phi_am: f64,
    pub c_am: f64,
    pub j10: f64,
    pub j20: f64,
    pub t0: f64,
    pub i0: f64,
    pub lambda0: f64,
    /// `k = z1 z2 T0`.
    pub k: f64,
    /// `β0 = z2 J10 Q`.
    pub beta0: f64,
    pub sigma_am: f64,
    /// Set by [`outer_middle_zeroth`]; the matching solver carries `y*` as an unknown instead.
    pub y_star: Option<f64>,
    pub ions: IonPair,
}

/// The integrals `Sz, S1, ..., S5` from `0` to `y`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SIntegrals {
    pub sz: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
    pub s5: f64,
}

impl MiddleZeroth {
    pub fn new(phi_am: f64, c_am: f64, j10: f64, j20: f64, q: f64, ions: &IonPair) -> Self {
        let (i0, t0, lambda0) = ions.combinations(j10, j20);
        Self {
            q,
            phi_am,
            c_am,
            j10,
            j20,
            t0,
            i0,
            lambda0,
            k: ions.z1 * ions.z2 * t0,
            beta0: ions.z2 * j10 * q,
            sigma_am: crate::model::sigma(c_am, q, ions),
            y_star: None,
            ions: *ions,
        }
    }

    pub fn phi0(&self, y: f64) -> f64 {
        self.phi_am - self.i0 * y
    }

    pub fn c10(&self, y: f64) -> f64 {
        self.c_am * (self.k * y).exp() + self.beta0 * y * phi1(self.k * y)
    }

    pub fn sigma(&self, y: f64) -> f64 {
        crate::model::sigma(self.c10(y), self.q, &self.ions)
    }

    /// `∫_0^y σ ds = H(τ(y)) - H(a)`.
    pub fn resistance_gain(&self, y: f64) -> f64 {
        let (z1, z2) = (self.ions.z1, self.ions.z2);
        (z1 - z2) * z1 * self.s1(y) - z2 * self.q * y
    }

    pub fn s1(&self, y: f64) -> f64 {
        let x = self.k * y;
        self.c_am * y * phi1(x) + self.beta0 * y * y * phi2(x)
    }

    pub fn s3(&self, y: f64) -> f64 {
        self.c_am * y + self.beta0 * y * y * phi2(-self.k * y)
    }

    pub fn sz(&self, y: f64) -> f64 {
        let dz = self.ions.z1 - self.ions.z2;
        self.j10 * y + (self.sigma(y) / self.sigma_am).ln() / (self.ions.z1 * dz)
    }

    pub fn s_integrals(&self, y: f64) -> SIntegrals {
        if y == 0.0 {
            return SIntegrals::default();
        }
        let (z1, z2) = (self.ions.z1, self.ions.z2);
        let dz = z1 - z2;
        let (k, q, t0, j10) = (self.k, self.q, self.t0, self.j10);
        let s1 = self.s1(y);
        let s3 = self.s3(y);
        let c = self.c10(y);
        let (s2, s4, s5) = if (k * y).abs() >= SMALL_KY {
            let s2 = (c * c - self.c_am * self.c_am) / (2.0 * k) - j10 / (z1 * t0) * s1 * q;
            let s4 = (c * c * (-k * y).exp() - self.c_am * self.c_am - 2.0 * z2 * j10 * q * s3) / k;
            let s5 = self.i0 * (c - self.c_am) / (z1 * z2 * dz * t0)
                + z2 * (self.sigma(y) / self.sigma_am).ln() / (z1 * z1 * dz * dz) * q
                - j10 * j10 * y * q / (z1 * t0);
            (s2, s4, s5)
        } else {
            let tol = 1e-15;
            let s2 = quad::adaptive(|s| self.c10(s).powi(2), 0.0, y, tol, tol);
            let s4 = quad::adaptive(|s| self.c10(s).powi(2) * (-k * s).exp(), 0.0, y, tol, tol);
            let s5 = quad::adaptive(|s| z1 * self.i0 * self.c10(s).powi(2) / self.sigma(s), 0.0, y, tol, tol);
            (s2, s4, s5)
        };
        SIntegrals { sz: self.sz(y), s1, s2, s3, s4, s5 }
    }

    /// The `y` in `[0, y_end]` where `H(τ(y)) - H(a) = gain`.
    pub fn y_at_resistance_gain(&self, gain: f64, y_end: f64) -> f64 {
        if gain <= 0.0 {
            return 0.0;
        }
        roots::brent(|y| self.resistance_gain(y) - gain, 0.0, y_end, 1e-15).unwrap_or(y_end)
    }
}

/// Zeroth-order solution between the limits at `a⁺` and `b⁻`, with `T0` from the closed form and
/// `y*` from the resistance relation `∫_0^{y*} σ = H(b) - H(a)`.
pub fn outer_middle_zeroth(
    am: &LayerLimit,
    bm: &LayerLimit,
    q: f64,
    geom: &ChannelGeometry,
    ions: &IonPair,
) -> Result<MiddleZeroth> {
    if !(am.c10 > 0.0 && bm.c10 > 0.0) {
        return Err(Error::InvalidLimits(format!("middle limits c10 = {}, {}", am.c10, bm.c10)));
    }
    let (z1, z2) = (ions.z1, ions.z2);
    let dz = z1 - z2;
    let dh = geom.h_b() - geom.h_a();
    let dphi = am.phi0 - bm.phi0;
    let t0 = -(dz * (am.c10 - bm.c10) + z2 * dphi * q) / (z2 * dh);
    let at = |y: f64| {
        let i0 = dphi / y;
        let j10 = (i0 - z2 * t0) / dz;
        MiddleZeroth::new(am.phi0, am.c10, j10, t0 - j10, q, ions)
    };
    let gap = |y: f64| at(y).resistance_gain(y) - dh;
    let mut hi = dh / crate::model::sigma(am.c10, q, ions).abs().max(1e-12);
    let mut lo = 0.0;
    let mut found = false;
    for _ in 0..80 {
        let g = gap(hi);
        if g.is_finite() && g > 0.0 {
            found = true;
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    if !found {
        return Err(Error::NoYStar(q));
    }
    let lo_eval = if lo == 0.0 { hi * 1e-12 } else { lo };
    let y_star = roots::brent(gap, lo_eval, hi, 1e-14)?;
    let mut z = at(y_star);
    z.y_star = Some(y_star);
    Ok(z)
}

/// First-order solution on the charged region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiddleFirst {
    pub zeroth: MiddleZeroth,
    pub phi1_am: f64,
    pub c11_am: f64,
    pub j11: f64,
    pub j21: f64,
    pub t1: f64,
    pub i1: f64,
}

const GL_NODES: usize = 20;

impl MiddleFirst {
    pub fn new(zeroth: &MiddleZeroth, phi1_am: f64, c11_am: f64, j11: f64, j21: f64) -> Self {
        let (i1, t1, _) = zeroth.ions.combinations(j11, j21);
        Self { zeroth: *zeroth, phi1_am, c11_am, j11, j21, t1, i1 }
    }

    /// `e^{-ky} [σ R - I0 Q z1 c10 (2(1-λ) z1 c10 - 2λQ)]`, the derivative of `e^{-ky} σ c11`.
    fn forcing(&self, y: f64) -> f64 {
        let z = &self.zeroth;
        let (z1, z2, lam) = (z.ions.z1, z.ions.z2, z.ions.lambda);
        let (q, t0) = (z.q, z.t0);
        let c = z.c10(y);
        let sg = z.sigma(y);
        let r = 2.0 * (lam * z1 - z2) * z1 * t0 * c * c
            + z1 * z2 * self.t1 * c
            + (2.0 * lam * z1 * t0 + 2.0 * (z1 - z2) * z.j10) * q * c
            + z2 * self.j11 * q;
        (-z.k * y).exp() * (sg * r - z.i0 * q * z1 * c * (2.0 * (1.0 - lam) * z1 * c - 2.0 * lam * q))
    }

    fn c11_from(&self, y: f64, w: f64) -> Result<f64> {
        let z = &self.zeroth;
        let sg = z.sigma(y);
        if !(sg > 0.0) {
            return Err(Error::SigmaVanishes { y, sigma: sg });
        }
        Ok((z.k * y).exp() / sg * (z.sigma_am * self.c11_am + w))
    }

    fn dphi1(&self, y: f64, c11: f64) -> f64 {
        let z = &self.zeroth;
        let (z1, z2, lam) = (z.ions.z1, z.ions.z2, z.ions.lambda);
        let (q, c) = (z.q, z.c10(y));
        z.i0 / z.sigma(y) * ((z1 - z2) * z1 * c11 + 2.0 * (1.0 - lam) * z1 * c * q - 2.0 * lam * q * q)
            + ((1.0 - lam) * z1 * c - lam * q) * z.t0
            - self.i1
            - z.lambda0 * q
    }

    fn panels(&self, y: f64) -> usize {
        (4.0 + (self.zeroth.k * y).abs()).ceil().min(400.0) as usize
    }

    pub fn c11(&self, y: f64) -> Result<f64> {
        let w = GaussLegendre::new(GL_NODES).composite(|s| self.forcing(s), 0.0, y, self.panels(y));
        self.c11_from(y, w)
    }

    /// `(φ1(y), c11(y))`.
    pub fn at(&self, y: f64) -> Result<(f64, f64)> {
        if y == 0.0 {
            return Ok((self.phi1_am, self.c11_am));
        }
        let gl = GaussLegendre::new(GL_NODES);
        let panels = self.panels(y);
        let width = y / panels as f64;
        let (mut w_start, mut phi) = (0.0, self.phi1_am);
        let mut err = None;
        for p in 0..panels {
            let lo = p as f64 * width;
            let hi = lo + width;
            phi += gl.integrate(
                |s| {
                    let w = w_start + gl.integrate(|t| self.forcing(t), lo, s);
                    match self.c11_from(s, w) {
                        Ok(c11) => self.dphi1(s, c11),
                        Err(e) => {
                            err.get_or_insert(e);
                            0.0
                        }
                    }
                },
                lo,
                hi,
            );
            w_start += gl.integrate(|t| self.forcing(t), lo, hi);
        }
        if let Some(e) = err {
            return Err(e);
        }
        Ok((phi, self.c11_from(y, w_start)?))
    }

    pub fn phi1(&self, y: f64) -> Result<f64> {
        Ok(self.at(y)?.0)
    }

    pub fn fluxes(&self) -> FluxExpansion {
        FluxExpansion { j10: self.zeroth.j10, j20: self.zeroth.j20, j11: self.j11, j21: self.j21 }
    }

    /// Residual of the `T1` consistency relation at `y*` against the exit limit `bm`, multiplied
    /// through by `T0` so that it stays finite as `T0 -> 0`.
    ///
    /// Obtained by evaluating the integrated `φ1` equation at `y*`. It vanishes exactly when the
    /// first-order profiles reach `bm`. The `J11` terms cancel, leaving a relation in `T1` alone.
    pub fn t1_relation_residual(&self, y_star: f64, bm: &EndValues) -> f64 {
        let z = &self.zeroth;
        let (z1, z2, lam) = (z.ions.z1, z.ions.z2, z.ions.lambda);
        let dz = z1 - z2;
        let (q, t0, j10, i0, l0) = (z.q, z.t0, z.j10, z.i0, z.lambda0);
        let s = z.s_integrals(y_star);
        let ln = (z.sigma(y_star) / z.sigma_am).ln();
        let lhs = self.t1 * (bm.c10 - z.c_am) - self.t1 * z2 * y_star * i0 * q / dz;
        let rhs = bm.c11 - self.c11_am - 2.0 * (lam * z1 - z2) * z1 * t0 * s.s2
            - ((2.0 * lam + (1.0 - lam) * z2 / dz) * z1 * t0 + 2.0 * dz * j10) * s.s1 * q
            + z2 * (bm.phi1 - self.phi1_am) * q / dz
            + 2.0 * (1.0 - lam) * z1 * s.s5 * q
            - 2.0 * lam * s.sz * q * q
            - 2.0 * (1.0 - lam) * z2 / dz * s.sz * q * q
            + 2.0 * lam * q * q * ln / (z1 * dz)
            - lam * z2 * t0 * y_star / dz * q * q
            + z2 / dz * l0 * y_star * q * q;
        lhs - t0 * rhs
    }
}

/// First-order solution whose `c11`, `φ1` reach the limits at `b⁻` at `y*`. The conditions are
/// linear in `(J11, J21)`, so the 2x2 system is assembled from three evaluations.
pub fn outer_middle_first(am: &LayerLimit, bm: &LayerLimit, zeroth: &MiddleZeroth) -> Result<MiddleFirst> {
    let y_star = zeroth.y_star.ok_or(Error::NoYStar(zeroth.q))?;
    let mismatch = |j11: f64, j21: f64| -> Result<[f64; 2]> {
        let (phi, c11) = MiddleFirst::new(zeroth, am.phi1, am.c11, j11, j21).at(y_star)?;
        Ok([c11 - bm.c11, phi - bm.phi1])
    };
    let r0 = mismatch(0.0, 0.0)?;
    let ra = mismatch(1.0, 0.0)?;
    let rb = mismatch(0.0, 1.0)?;
    let m = nalgebra::Matrix2::new(ra[0] - r0[0], rb[0] - r0[0], ra[1] - r0[1], rb[1] - r0[1]);
    let sol = m
        .lu()
        .solve(&nalgebra::Vector2::new(-r0[0], -r0[1]))
        .ok_or(Error::SingularJacobian { condition: f64::INFINITY })?;
    Ok(MiddleFirst::new(zeroth, am.phi1, am.c11, sol[0], sol[1]))
}
