//! Dimensionless two-species model, hard-sphere coefficients and flux bookkeeping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ChannelGeometry;

/// Valences and hard-sphere diameters of the two ion species.
///
/// Species 1 has diameter `d`, species 2 has `lambda * d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonPair {
    pub z1: f64,
    pub z2: f64,
    pub d: f64,
    pub lambda: f64,
}

impl Default for IonPair {
    fn default() -> Self {
        Self { z1: 1.0, z2: -1.0, d: 0.0, lambda: 1.0 }
    }
}

impl IonPair {
    pub fn new(z1: f64, z2: f64, d: f64, lambda: f64) -> Result<Self> {
        let ions = Self { z1, z2, d, lambda };
        ions.validate()?;
        Ok(ions)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.z1 > 0.0 && self.z2 < 0.0) {
            return Err(Error::InvalidModel(format!("need z1 > 0 > z2, got z1 = {}, z2 = {}", self.z1, self.z2)));
        }
        if !(self.d >= 0.0) || !self.d.is_finite() {
            return Err(Error::InvalidModel(format!("need d >= 0, got {}", self.d)));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidModel(format!("need lambda > 0, got {}", self.lambda)));
        }
        Ok(())
    }

    pub fn d1(&self) -> f64 {
        self.d
    }

    pub fn d2(&self) -> f64 {
        self.lambda * self.d
    }

    pub fn with_d(self, d: f64) -> Self {
        Self { d, ..self }
    }

    /// Flux combinations `(I, T, Λ)` of a flux pair.
    pub fn combinations(&self, j1: f64, j2: f64) -> (f64, f64, f64) {
        (self.z1 * j1 + self.z2 * j2, j1 + j2, j1 + self.lambda * j2)
    }

    /// Fluxes recovered from current `I` and total flux `T`.
    pub fn fluxes_from_current(&self, i: f64, t: f64) -> (f64, f64) {
        let dz = self.z1 - self.z2;
        ((i - self.z2 * t) / dz, (self.z1 * t - i) / dz)
    }
}

/// Potential and bath concentrations at the two ends of the channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryData {
    pub v: f64,
    pub l1: f64,
    pub l2: f64,
    pub r1: f64,
    pub r2: f64,
}

impl BoundaryData {
    pub fn validate(&self) -> Result<()> {
        for (name, c) in [("l1", self.l1), ("l2", self.l2), ("r1", self.r1), ("r2", self.r2)] {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::InvalidModel(format!("{name} must be positive, got {c}")));
            }
        }
        if !self.v.is_finite() {
            return Err(Error::InvalidModel("V must be finite".into()));
        }
        Ok(())
    }

    /// Electroneutral 1:1 data `l1 = l2 = l`, `r1 = r2 = r`.
    pub fn symmetric(v: f64, l: f64, r: f64) -> Self {
        Self { v, l1: l, l2: l, r1: r, r2: r }
    }

    pub fn with_v(self, v: f64) -> Self {
        Self { v, ..self }
    }
}

/// Permanent charge: `q2` on `(a, b)`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermanentCharge {
    pub q2: f64,
}

impl PermanentCharge {
    pub fn at(&self, x: f64, a: f64, b: f64) -> f64 {
        if x > a && x < b {
            self.q2
        } else {
            0.0
        }
    }
}

/// `J_k = J_k0 + J_k1 d`. Combinations are always recomputed from the fluxes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FluxExpansion {
    pub j10: f64,
    pub j20: f64,
    pub j11: f64,
    pub j21: f64,
}

impl FluxExpansion {
    pub fn i0(&self, ions: &IonPair) -> f64 {
        ions.z1 * self.j10 + ions.z2 * self.j20
    }

    pub fn i1(&self, ions: &IonPair) -> f64 {
        ions.z1 * self.j11 + ions.z2 * self.j21
    }

    pub fn t0(&self) -> f64 {
        self.j10 + self.j20
    }

    pub fn t1(&self) -> f64 {
        self.j11 + self.j21
    }

    pub fn lambda0(&self, ions: &IonPair) -> f64 {
        self.j10 + ions.lambda * self.j20
    }

    pub fn lambda1(&self, ions: &IonPair) -> f64 {
        self.j11 + ions.lambda * self.j21
    }

    /// `(J1, J2)` truncated at first order in `d`.
    pub fn at(&self, d: f64) -> (f64, f64) {
        (self.j10 + self.j11 * d, self.j20 + self.j21 * d)
    }
}

/// Complete problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub ions: IonPair,
    pub boundary: BoundaryData,
    pub geometry: ChannelGeometry,
    pub charge: PermanentCharge,
    pub epsilon: f64,
}

impl ModelSpec {
    pub fn new(
        ions: IonPair,
        boundary: BoundaryData,
        geometry: ChannelGeometry,
        q2: f64,
        epsilon: f64,
    ) -> Result<Self> {
        let m = Self { ions, boundary, geometry, charge: PermanentCharge { q2 }, epsilon };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.ions.validate()?;
        self.boundary.validate()?;
        if !self.charge.q2.is_finite() {
            return Err(Error::InvalidModel("Q2 must be finite".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidModel(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }

    pub fn q2(&self) -> f64 {
        self.charge.q2
    }

    pub fn with_q2(&self, q2: f64) -> Self {
        Self { charge: PermanentCharge { q2 }, ..self.clone() }
    }

    pub fn with_v(&self, v: f64) -> Self {
        Self { boundary: self.boundary.with_v(v), ..self.clone() }
    }

    pub fn with_d(&self, d: f64) -> Self {
        Self { ions: self.ions.with_d(d), ..self.clone() }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { ions: IonPair { lambda, ..self.ions }, ..self.clone() }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..self.clone() }
    }
}

/// Coefficients of `c_k' = -f_k φ' - g_k / h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FgCoefficients {
    pub f1: f64,
    pub f2: f64,
    pub g1: f64,
    pub g2: f64,
}

pub fn eval_fg(c1: f64, c2: f64, j1: f64, j2: f64, ions: &IonPair) -> FgCoefficients {
    let (z1, z2, d, lam) = (ions.z1, ions.z2, ions.d, ions.lambda);
    let s = (c1 + lam * lam * c2) * d * d;
    let q = z1 * c1 + z2 * c2;
    let t = j1 + j2;
    FgCoefficients {
        f1: z1 * c1 - (2.0 * z1 * c1 + (1.0 + lam) * z2 * c2) * c1 * d + s * q * c1,
        f2: z2 * c2 - (2.0 * lam * z2 * c2 + (1.0 + lam) * z1 * c1) * c2 * d + s * q * c2,
        g1: j1 - (2.0 * j1 + (1.0 + lam) * j2) * c1 * d + s * t * c1,
        g2: j2 - (2.0 * lam * j2 + (1.0 + lam) * j1) * c2 * d + s * t * c2,
    }
}

fn packing(c1: f64, c2: f64, ions: &IonPair) -> Result<f64> {
    let p = 1.0 - ions.d1() * c1 - ions.d2() * c2;
    if p > 0.0 {
        Ok(p)
    } else {
        Err(Error::PackingOverflow(p))
    }
}

/// Hard-sphere excess chemical potentials `μ_k^HS / k_B T`.
pub fn hs_chemical_potential(c1: f64, c2: f64, ions: &IonPair) -> Result<(f64, f64)> {
    let p = packing(c1, c2, ions)?;
    let base = -p.ln();
    let s = (c1 + c2) / p;
    Ok((base + ions.d1() * s, base + ions.d2() * s))
}

/// `x`-derivatives of the hard-sphere potentials along `(c1, c2)` with slopes `(dc1, dc2)`.
pub fn hs_chemical_potential_gradient(c1: f64, c2: f64, dc1: f64, dc2: f64, ions: &IonPair) -> Result<(f64, f64)> {
    let p = packing(c1, c2, ions)?;
    let (a11, a12, a22) = hs_jacobian(c1, c2, ions, p);
    Ok((a11 * dc1 + a12 * dc2, a12 * dc1 + a22 * dc2))
}

/// Hard-sphere potentials together with their Jacobian entries `(a11, a12, a22)`.
pub fn hs_chemical_potential_with_jacobian(c1: f64, c2: f64, ions: &IonPair) -> Result<((f64, f64), (f64, f64, f64))> {
    let p = packing(c1, c2, ions)?;
    let base = -p.ln();
    let s = (c1 + c2) / p;
    Ok(((base + ions.d1() * s, base + ions.d2() * s), hs_jacobian(c1, c2, ions, p)))
}

/// Symmetric Jacobian `∂μ_i/∂c_j` entries `(a11, a12, a22)`.
pub(crate) fn hs_jacobian(c1: f64, c2: f64, ions: &IonPair, p: f64) -> (f64, f64, f64) {
    let (d1, d2) = (ions.d1(), ions.d2());
    let p2 = p * p;
    let a11 = d1 * (2.0 + d1 * (c2 - c1) - 2.0 * d2 * c2) / p2;
    let a12 = (d1 + d2 - d1 * d1 * c1 - d2 * d2 * c2) / p2;
    let a22 = d2 * (2.0 + d2 * (c1 - c2) - 2.0 * d1 * c1) / p2;
    (a11, a12, a22)
}

/// `σ = (z1 - z2) z1 c10 - z2 Q`.
pub fn sigma(c10: f64, q: f64, ions: &IonPair) -> f64 {
    (ions.z1 - ions.z2) * ions.z1 * c10 - ions.z2 * q
}

/// `w(a, b) = a + λ b + (λ z1 - z2)/(z1 - z2) (a + b)`.
pub fn w_combination(a: f64, b: f64, ions: &IonPair) -> f64 {
    a + ions.lambda * b + (ions.lambda * ions.z1 - ions.z2) / (ions.z1 - ions.z2) * (a + b)
}

/// Physical constants for converting between SI and dimensionless quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub elementary_charge: f64,
    pub boltzmann: f64,
    pub temperature: f64,
    pub relative_permittivity: f64,
    pub vacuum_permittivity: f64,
    pub diffusivity: [f64; 2],
}

impl PhysicalConstants {
    pub const UNIT: Self = Self {
        elementary_charge: 1.0,
        boltzmann: 1.0,
        temperature: 1.0,
        relative_permittivity: 1.0,
        vacuum_permittivity: 1.0,
        diffusivity: [1.0, 1.0],
    };

    /// Water at room temperature with typical diffusivities in m²/s.
    pub fn water_298k() -> Self {
        Self {
            elementary_charge: 1.602_176_634e-19,
            boltzmann: 1.380_649e-23,
            temperature: 298.15,
            relative_permittivity: 78.4,
            vacuum_permittivity: 8.854_187_8128e-12,
            diffusivity: [1.33e-9, 2.03e-9],
        }
    }

    pub fn thermal_voltage(&self) -> f64 {
        self.boltzmann * self.temperature / self.elementary_charge
    }

    pub fn epsilon_squared(&self) -> f64 {
        self.relative_permittivity * self.vacuum_permittivity * self.boltzmann * self.temperature
            / (self.elementary_charge * self.elementary_charge)
    }

    pub fn rescale(&self, potential: f64, voltage: f64, fluxes: [f64; 2]) -> Dimensionless {
        let vt = self.thermal_voltage();
        Dimensionless {
            phi: potential / vt,
            v: voltage / vt,
            epsilon_squared: self.epsilon_squared(),
            j: [fluxes[0] / self.diffusivity[0], fluxes[1] / self.diffusivity[1]],
        }
    }

    /// Inverse of [`rescale`](Self::rescale): returns `(potential, voltage, fluxes)`.
    pub fn unrescale(&self, dimless: &Dimensionless) -> (f64, f64, [f64; 2]) {
        let vt = self.thermal_voltage();
        (
            dimless.phi * vt,
            dimless.v * vt,
            [dimless.j[0] * self.diffusivity[0], dimless.j[1] * self.diffusivity[1]],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimensionless {
    pub phi: f64,
    pub v: f64,
    pub epsilon_squared: f64,
    pub j: [f64; 2],
}
