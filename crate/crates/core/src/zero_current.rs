//! Zero-current fluxes for `z1 = -z2` and electroneutral baths, their small-`Q` expansion
//! `J11 = J21 = (M00 + M01 Q)/H(a)`, reversal and critical potentials, and the `Q`-derivatives of
//! the first-order fluxes.
//!
//! The closed forms divide by `ln(l/r)`. Every such quotient is evaluated as
//! `ln(x/y)/ln(l/r) = ((x - y)/(l - r)) · L(l, r)/L(x, y)` with `L` the logarithmic mean, where
//! `(x - y)/(l - r)` is an exact coefficient, so `l = r` is a regular point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{solve_matching, solve_matching_from, solve_zero_current_orbit, SolverOptions};
use crate::model::{IonPair, ModelSpec};
use crate::numerics::roots;
use crate::numerics::special::logmean;

/// Bath and geometry data in the notation of the zero-current formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectroneutralShorthand {
    /// `z1 l1 = -z2 l2`.
    pub l: f64,
    /// `z1 r1 = -z2 r2`.
    pub r: f64,
    /// `H(a)/H(1)`.
    pub alpha: f64,
    /// `H(b)/H(1)`.
    pub beta: f64,
    pub h_a: f64,
    pub h_1: f64,
}

impl ElectroneutralShorthand {
    pub fn new(model: &ModelSpec) -> Result<Self> {
        let (z1, z2) = (model.ions.z1, model.ions.z2);
        let b = &model.boundary;
        let left = z1 * b.l1 + z2 * b.l2;
        let right = z1 * b.r1 + z2 * b.r2;
        let scale = b.l1.max(b.l2).max(b.r1).max(b.r2);
        if left.abs() > 1e-12 * scale || right.abs() > 1e-12 * scale {
            return Err(Error::NonNeutralBoundary { left, right });
        }
        let g = &model.geometry;
        Ok(Self { l: z1 * b.l1, r: z1 * b.r1, alpha: g.alpha(), beta: g.beta(), h_a: g.h_a(), h_1: g.h_1() })
    }

    /// `ln(x/y) / ln(l/r)` given `x - y = coef (l - r)`.
    fn log_quotient(&self, x: f64, y: f64, coef: f64) -> f64 {
        coef * logmean(self.l, self.r) / logmean(x, y)
    }

    fn m_a(&self) -> f64 {
        (1.0 - self.alpha) * self.l + self.alpha * self.r
    }

    fn m_b(&self) -> f64 {
        (1.0 - self.beta) * self.l + self.beta * self.r
    }

    /// `Φ(V) = φ^a_{0,0} - φ^b_{0,0}`.
    pub fn phi_v(&self, v: f64) -> f64 {
        v * self.log_quotient(self.m_a(), self.m_b(), self.beta - self.alpha)
    }
}

/// Terms of the small-`Q` zero-current expansion at one potential `V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroCurrentCoefficients {
    pub v: f64,
    pub phi_v: f64,
    pub c10_a0: f64,
    pub c10_b0: f64,
    pub c10_a1: f64,
    pub c10_b1: f64,
    pub phi1_a0: f64,
    pub phi1_b0: f64,
    pub c11_a1: f64,
    pub c21_a1: f64,
    pub m00: f64,
    pub m01: f64,
    pub m20: f64,
}

/// Closed-form coefficients `M00`, `M01`, `M20` and their ingredients at potential `v`.
pub fn zero_current_coefficients(sh: &ElectroneutralShorthand, v: f64, ions: &IonPair) -> ZeroCurrentCoefficients {
    let (z1, z2, lam) = (ions.z1, ions.z2, ions.lambda);
    let dz = z1 - z2;
    let (l, r, al, be) = (sh.l, sh.r, sh.alpha, sh.beta);
    let (ma, mb) = (sh.m_a(), sh.m_b());
    let lm = logmean(l, r);
    let phi_v = sh.phi_v(v);
    let gam = lam * z1 - z2;
    // (λz1 - z2)(l - r)V / (z1 z2 ln(l/r))
    let k = gam * lm * v / (z1 * z2);
    let q_la = sh.log_quotient(l, ma, al);
    let q_rb = sh.log_quotient(r, mb, be - 1.0);
    let phi1_a0 = k * (al * ((l + r) - al * (l - r)) / ma - 2.0 * q_la) + (1.0 - lam) * lm * (l / ma).ln() / (z1 * z2)
        - (1.0 - lam) * al * (l - r) / (z1 * z2);
    let phi1_b0 = k * ((be - 1.0) * ((l + r) + (1.0 - be) * (l - r)) / mb - 2.0 * q_rb)
        + (1.0 - lam) * lm * (r / mb).ln() / (z1 * z2)
        + (1.0 - lam) * (1.0 - be) * (l - r) / (z1 * z2);
    let c10_a0 = ma / z1;
    let c10_b0 = mb / z1;
    let c10_a1 = -z2 * al * phi_v / dz - 1.0 / (2.0 * dz);
    let c10_b1 = z2 * (1.0 - be) * phi_v / dz - 1.0 / (2.0 * dz);
    let c11_a1 = 2.0 * gam * al / (z2 * dz) * phi_v * ((2.0 * be - al - 1.0) * l + (al * al - be * be) * (l - r) - be * r)
        - z2 * al / dz * (phi1_a0 - phi1_b0)
        - (1.0 - lam) * (l - r) * al * (al - be) / (2.0 * z1 * dz)
        + 2.0 * gam / z2 * ((1.0 - al) * c10_a1 * c10_a0 + al * c10_b1 * c10_b0)
        + (lam * dz + gam) / (2.0 * z2 * dz) * ((1.0 - al) * c10_a0 + al * c10_b0);
    let c21_a1 = -z1 * c11_a1 / z2;
    let m00 = gam * al * (r * r - l * l) / (z1 * z1 * z2);
    let m20 = gam * (1.0 - be) * (r * r - l * l) / (z1 * z1 * z2);
    let m01 = 2.0 * gam / z2 * c10_a1 * c10_a0 + lam / (2.0 * z2) * c10_a0 + gam / (2.0 * z2 * dz) * c10_a0
        + z2 / dz * (c11_a1 + c21_a1);
    ZeroCurrentCoefficients { v, phi_v, c10_a0, c10_b0, c10_a1, c10_b1, phi1_a0, phi1_b0, c11_a1, c21_a1, m00, m01, m20 }
}

/// `J11 = J21 = (M00 + M01 Q)/H(a)` at potential `v`.
pub fn zero_current_j11(sh: &ElectroneutralShorthand, v: f64, q: f64, ions: &IonPair) -> f64 {
    let c = zero_current_coefficients(sh, v, ions);
    (c.m00 + c.m01 * q) / sh.h_a
}

fn require_opposite_valences(ions: &IonPair) -> Result<()> {
    if ions.z1 + ions.z2 != 0.0 {
        return Err(Error::ValenceMismatch { z1: ions.z1, z2: ions.z2 });
    }
    Ok(())
}

/// The closed forms of `T1 = J11 + J21` and `I1 = z1 J11 + z2 J21` for the uncharged channel.
pub fn flux_sum_check(model: &ModelSpec) -> Result<(f64, f64)> {
    if model.q2() != 0.0 {
        return Err(Error::InvalidModel("flux sums are defined for Q = 0".into()));
    }
    let sh = ElectroneutralShorthand::new(model)?;
    let (z1, z2, lam) = (model.ions.z1, model.ions.z2, model.ions.lambda);
    let dz = z1 - z2;
    let (l, r, h1, v) = (sh.l, sh.r, sh.h_1, model.boundary.v);
    let lm = logmean(l, r);
    let gam = lam * z1 - z2;
    let t1 = gam * (z2 - z1) * (r * r - l * l) / (z1 * z1 * z2 * z2 * h1);
    let i1 = gam * dz * lm / (z1 * z2 * h1) * (2.0 * lm - (r + l)) * v + (1.0 - lam) * (r - l) * dz * lm / (z1 * z2 * h1);
    Ok((t1, i1))
}

/// How the potential is chosen for the zero-current formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroCurrentMode {
    /// `V` is taken from the model, which must already carry no zeroth-order current.
    Verification,
    /// `V` is released and solved for together with the orbit.
    Reversal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroCurrentResult {
    pub mode: ZeroCurrentMode,
    pub shorthand: ElectroneutralShorthand,
    /// Potential used in the formulas.
    pub v: f64,
    /// First-order potential correction of the zero-current orbit (reversal mode only).
    pub v1: f64,
    pub j10: f64,
    pub j20: f64,
    /// `(M00 + M01 Q)/H(a)`.
    pub j11: f64,
    pub j21: f64,
    /// First-order fluxes of the matched orbit at the same data.
    pub j11_orbit: f64,
    pub j21_orbit: f64,
    /// `N0` of the left region of the orbit; zero when `J11 = J21`.
    pub n0: f64,
    pub i0: f64,
    pub i1: f64,
    pub coefficients: ZeroCurrentCoefficients,
    pub v_critical: Vec<f64>,
}

/// Zero-current fluxes at the model data.
pub fn zero_current_fluxes(model: &ModelSpec, mode: ZeroCurrentMode, opts: &SolverOptions) -> Result<ZeroCurrentResult> {
    require_opposite_valences(&model.ions)?;
    let sh = ElectroneutralShorthand::new(model)?;
    let ions = model.ions;
    let orbit = match mode {
        ZeroCurrentMode::Reversal => solve_zero_current_orbit(model, opts)?,
        ZeroCurrentMode::Verification => {
            let sol = solve_matching(model, opts)?;
            let i0 = sol.fluxes.i0(&ions);
            let scale = 1f64.max(sol.fluxes.j10.abs()).max(sol.fluxes.j20.abs());
            if i0.abs() > 1e-8 * scale {
                return Err(Error::InvalidModel(format!(
                    "boundary data carry the current I0 = {i0:e} at V = {}",
                    model.boundary.v
                )));
            }
            sol
        }
    };
    let v = orbit.v0;
    let coefficients = zero_current_coefficients(&sh, v, &ions);
    let j11 = (coefficients.m00 + coefficients.m01 * model.q2()) / sh.h_a;
    let f = orbit.fluxes;
    Ok(ZeroCurrentResult {
        mode,
        shorthand: sh,
        v,
        v1: orbit.v1,
        j10: f.j10,
        j20: f.j20,
        j11,
        j21: j11,
        j11_orbit: f.j11,
        j21_orbit: f.j21,
        n0: orbit.left.n,
        i0: f.i0(&ions),
        i1: f.i1(&ions),
        coefficients,
        v_critical: critical_voltages(&sh, &ions, DEFAULT_V_RANGE).unwrap_or_default().iter().map(|c| c.v).collect(),
    })
}

/// Zeroth-order reversal potential: root of `I0(V)` over fixed-potential matching solves.
pub fn reversal_potential_zeroth(model: &ModelSpec, opts: &SolverOptions) -> Result<f64> {
    let ions = model.ions;
    let i0 = |v: f64| solve_matching(&model.with_v(v), opts).map(|s| s.fluxes.i0(&ions)).unwrap_or(f64::NAN);
    let (lo, hi) = roots::expand_bracket(i0, 0.0, 0.5, 7).map_err(|e| match e {
        Error::BracketFailure { lo, hi, .. } => Error::NoBracket { what: "I0(V)".into(), lo, hi },
        other => other,
    })?;
    let v = roots::brent(i0, lo, hi, 1e-13)?;
    Ok(v)
}

/// Search interval for `M01(V) = 0`.
pub const DEFAULT_V_RANGE: (f64, f64) = (-50.0, 50.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalVoltage {
    pub v: f64,
    /// `J11` at `V^c`, where it no longer depends on `Q` to first order.
    pub j11: f64,
}

/// Every sign change of `M01(V)` on `range`. `NoBracket` when there is none.
pub fn critical_voltages(sh: &ElectroneutralShorthand, ions: &IonPair, range: (f64, f64)) -> Result<Vec<CriticalVoltage>> {
    let m01 = |v: f64| zero_current_coefficients(sh, v, ions).m01;
    let n = 400;
    let step = (range.1 - range.0) / n as f64;
    let mut out: Vec<CriticalVoltage> = Vec::new();
    let mut push = |v: f64| {
        if out.last().is_none_or(|c| (c.v - v).abs() > 1e-9) {
            out.push(CriticalVoltage { v, j11: zero_current_j11(sh, v, 0.0, ions) });
        }
    };
    let mut prev = (range.0, m01(range.0));
    if prev.1 == 0.0 {
        push(prev.0);
    }
    for i in 1..=n {
        let v = range.0 + step * i as f64;
        let f = m01(v);
        if f == 0.0 {
            push(v);
        } else if prev.1 != 0.0 && prev.1.signum() != f.signum() {
            push(roots::brent(m01, prev.0, v, 1e-13)?);
        }
        prev = (v, f);
    }
    if out.is_empty() {
        return Err(Error::NoBracket { what: "M01(V)".into(), lo: range.0, hi: range.1 });
    }
    Ok(out)
}

/// `V^c` and `J11(V^c)` for the model data; the first sign change when there are several.
pub fn critical_voltage(model: &ModelSpec) -> Result<CriticalVoltage> {
    require_opposite_valences(&model.ions)?;
    let sh = ElectroneutralShorthand::new(model)?;
    Ok(critical_voltages(&sh, &model.ions, DEFAULT_V_RANGE)?[0])
}

/// First-order fluxes to first order in `Q`: `J_{k1} = J_{k1,0} + J_{k1,1} Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionCoefficients {
    pub j11_1: f64,
    pub j21_1: f64,
    pub i1: f64,
    pub t1: f64,
    pub m01: f64,
    pub n01: f64,
}

/// Step for the `Q`-differences; refined once by Richardson extrapolation.
pub const Q_STEP: f64 = 1e-4;

fn richardson(f: impl Fn(f64) -> Result<[f64; 2]>, h: f64) -> Result<[f64; 2]> {
    let d = |h: f64| -> Result<[f64; 2]> {
        let (p, m) = (f(h)?, f(-h)?);
        Ok([(p[0] - m[0]) / (2.0 * h), (p[1] - m[1]) / (2.0 * h)])
    };
    let (big, small) = (d(h)?, d(0.5 * h)?);
    Ok([(4.0 * small[0] - big[0]) / 3.0, (4.0 * small[1] - big[1]) / 3.0])
}

/// `J_{k1,1}` as `Q`-derivatives of the matched `J_{k1}` at `Q = 0` and fixed `V`, with `M01`, `N01`
/// recovered from `T1 = -(z1 - z2) M01/(z2 H(a))` and `I1 = z1 (z1 - z2) N01 / H(a)`.
pub fn interaction_coefficients(model: &ModelSpec, opts: &SolverOptions) -> Result<InteractionCoefficients> {
    let base = solve_matching(&model.with_q2(0.0), opts)?;
    let fluxes = |q: f64| -> Result<[f64; 2]> {
        let s = solve_matching_from(&model.with_q2(q), &base, opts)?;
        Ok([s.fluxes.j11, s.fluxes.j21])
    };
    let [j11_1, j21_1] = richardson(fluxes, Q_STEP)?;
    Ok(from_derivatives(j11_1, j21_1, model))
}

fn from_derivatives(j11_1: f64, j21_1: f64, model: &ModelSpec) -> InteractionCoefficients {
    let (z1, z2) = (model.ions.z1, model.ions.z2);
    let dz = z1 - z2;
    let h_a = model.geometry.h_a();
    let i1 = z1 * j11_1 + z2 * j21_1;
    let t1 = j11_1 + j21_1;
    InteractionCoefficients { j11_1, j21_1, i1, t1, m01: -z2 * h_a * t1 / dz, n01: h_a * i1 / (z1 * dz) }
}

/// As [`interaction_coefficients`] along the zero-current orbit, where `V = V0(Q) + V1(Q) d`.
pub fn zero_current_interaction(model: &ModelSpec, opts: &SolverOptions) -> Result<InteractionCoefficients> {
    require_opposite_valences(&model.ions)?;
    ElectroneutralShorthand::new(model)?;
    let fluxes = |q: f64| -> Result<[f64; 2]> {
        let s = solve_zero_current_orbit(&model.with_q2(q), opts)?;
        Ok([s.fluxes.j11, s.fluxes.j21])
    };
    let [j11_1, j21_1] = richardson(fluxes, Q_STEP)?;
    Ok(from_derivatives(j11_1, j21_1, model))
}

/// Sign statements about the zero-current `J11` for `Q = 0` and small `Q > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremCheck {
    pub l_greater_than_r: bool,
    /// `J11 > 0` at `Q = 0` when `l > r`, `< 0` when `l < r`.
    pub j11_sign_at_zero_charge: bool,
    /// `∂J11/∂V < 0` at every grid point where it is decided.
    pub j11_decreasing_in_v: bool,
    pub critical_voltages: Vec<f64>,
    pub critical_voltage_negative: bool,
    /// `∂J11/∂Q > 0` below `V^c` and `< 0` above it.
    pub q_derivative_changes_sign: bool,
    /// `J11(V^c)` has the sign of `l - r`.
    pub j11_sign_at_critical_voltage: bool,
}

impl TheoremCheck {
    pub fn all_hold(&self) -> bool {
        self.j11_sign_at_zero_charge
            && self.j11_decreasing_in_v
            && self.critical_voltage_negative
            && self.q_derivative_changes_sign
            && self.j11_sign_at_critical_voltage
    }
}

/// Derivative signs are decided only when their magnitude exceeds this.
pub const SIGN_THRESHOLD: f64 = 1e-8;

/// Evaluates the sign statements on the closed forms, with derivatives by central differences
/// (`Q` about 0 with step [`Q_STEP`], `V` with the grid spacing).
pub fn theorem_check(model: &ModelSpec, q: f64, v_grid: &[f64]) -> Result<TheoremCheck> {
    require_opposite_valences(&model.ions)?;
    let sh = ElectroneutralShorthand::new(model)?;
    let ions = model.ions;
    let j11 = |v: f64, q: f64| zero_current_j11(&sh, v, q, &ions);
    let sign = if sh.l > sh.r { 1.0 } else { -1.0 };
    let j0 = j11(0.0, 0.0);
    let dv = |v: f64| {
        let h = 1e-3 * (1.0 + v.abs());
        (j11(v + h, q) - j11(v - h, q)) / (2.0 * h)
    };
    let dq = |v: f64| (j11(v, Q_STEP) - j11(v, -Q_STEP)) / (2.0 * Q_STEP);
    let decreasing = v_grid.iter().all(|&v| {
        let d = dv(v);
        d.abs() <= SIGN_THRESHOLD || d < 0.0
    }) && v_grid.iter().any(|&v| dv(v) < -SIGN_THRESHOLD);
    let crit = critical_voltages(&sh, &ions, DEFAULT_V_RANGE).unwrap_or_default();
    let vc: Vec<f64> = crit.iter().map(|c| c.v).collect();
    let negative = vc.iter().any(|&v| v < 0.0);
    let changes = crit.iter().any(|c| {
        let h = 1e-2 * (1.0 + c.v.abs());
        let (below, above) = (dq(c.v - h), dq(c.v + h));
        below > SIGN_THRESHOLD && above < -SIGN_THRESHOLD
    });
    let at_vc = !crit.is_empty() && crit.iter().all(|c| c.j11 * sign > 0.0);
    Ok(TheoremCheck {
        l_greater_than_r: sh.l > sh.r,
        j11_sign_at_zero_charge: j0 * sign > 0.0,
        j11_decreasing_in_v: decreasing,
        critical_voltages: vc,
        critical_voltage_negative: negative,
        q_derivative_changes_sign: changes,
        j11_sign_at_critical_voltage: at_vc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ChannelGeometry;
    use crate::layers::{layer_limit, JunctionValues, LayerSide};
    use crate::model::BoundaryData;
    use crate::regular::NeutralRegion;

    fn model(v: f64, q: f64, l: f64, r: f64, lambda: f64, a: f64, b: f64) -> ModelSpec {
        ModelSpec::new(
            IonPair::new(1.0, -1.0, 0.0, lambda).unwrap(),
            BoundaryData::symmetric(v, l, r),
            ChannelGeometry::uniform(a, b).unwrap(),
            q,
            1e-4,
        )
        .unwrap()
    }

    #[test]
    fn uncharged_coefficient_is_positive_when_left_bath_is_richer() {
        for lam in [0.5, 1.0, 2.0] {
            let m = model(0.0, 0.0, 2.0, 1.0, lam, 0.3, 0.6);
            let sh = ElectroneutralShorthand::new(&m).unwrap();
            let c = zero_current_coefficients(&sh, 0.0, &m.ions);
            assert!((c.m00 - (lam + 1.0) * 0.3 * 3.0).abs() < 1e-14 && c.m00 > 0.0);
        }
    }

    #[test]
    fn equal_baths_give_zero_coefficients() {
        let m = model(0.0, 0.0, 1.5, 1.5, 1.3, 1.0 / 3.0, 2.0 / 3.0);
        let sh = ElectroneutralShorthand::new(&m).unwrap();
        let c = zero_current_coefficients(&sh, 0.0, &m.ions);
        assert_eq!(c.m00, 0.0);
        assert!(c.m01.is_finite());
        let r = zero_current_fluxes(&m, ZeroCurrentMode::Reversal, &SolverOptions::default()).unwrap();
        for j in [r.j10, r.j20, r.j11_orbit, r.j21_orbit] {
            assert!(j.abs() < 1e-10);
        }
    }

    #[test]
    fn removable_log_quotients_are_continuous() {
        let ions = IonPair::new(1.0, -1.0, 0.0, 1.7).unwrap();
        let at = |r: f64| {
            let m = model(0.0, 0.0, 1.5, r, 1.7, 0.25, 0.7);
            zero_current_coefficients(&ElectroneutralShorthand::new(&m).unwrap(), 0.9, &ions)
        };
        let (a, b) = (at(1.5), at(1.5 * (1.0 + 1e-7)));
        assert!((a.m01 - b.m01).abs() < 1e-5, "{} vs {}", a.m01, b.m01);
        assert!((a.phi1_a0 - b.phi1_a0).abs() < 1e-5);
        assert!((a.phi_v - b.phi_v).abs() < 1e-6);
    }

    #[test]
    fn right_coefficient_ratio() {
        let m = model(0.3, 0.0, 2.0, 0.7, 1.4, 0.2, 0.9);
        let sh = ElectroneutralShorthand::new(&m).unwrap();
        let c = zero_current_coefficients(&sh, 0.3, &m.ions);
        assert!((c.m20 * sh.alpha - c.m00 * (1.0 - sh.beta)).abs() < 1e-12);
        assert_eq!(m.ions.z1 * c.c11_a1 + m.ions.z2 * c.c21_a1, 0.0);
    }

    #[test]
    fn flux_sums_match_the_single_region_solution() {
        let m = model(0.7, 0.0, 1.0, 2.0, 2.0, 1.0 / 3.0, 2.0 / 3.0);
        let (t1, i1) = flux_sum_check(&m).unwrap();
        let ions = m.ions;
        let bd = &m.boundary;
        let l = layer_limit(&JunctionValues::zeroth(bd.v, bd.l1, bd.l2), 0.0, LayerSide::Forward, &ions).unwrap();
        let r = layer_limit(&JunctionValues::zeroth(0.0, bd.r1, bd.r2), 0.0, LayerSide::Backward, &ions).unwrap();
        let whole = NeutralRegion::new((&l).into(), (&r).into(), (0.0, 1.0), (0.0, 1.0), &ions).unwrap();
        assert!((t1 - whole.t1).abs() < 1e-12, "{t1} vs {}", whole.t1);
        assert!((i1 - whole.i1).abs() < 1e-12, "{i1} vs {}", whole.i1);
        let eq = model(0.0, 0.0, 1.2, 1.2, 2.0, 0.3, 0.6);
        let (t, i) = flux_sum_check(&eq).unwrap();
        assert_eq!((t, i), (0.0, 0.0));
    }

    #[test]
    fn potential_term_of_the_current_sum_vanishes_at_its_coefficient_root() {
        // 2(r - l)/ln(r/l) = r + l has no solution with r != l, so take the coefficient itself
        let m = model(1.0, 0.0, 2.0, 1.0, 1.0, 0.3, 0.6);
        let (_, i_at_1) = flux_sum_check(&m).unwrap();
        let (_, i_at_0) = flux_sum_check(&m.with_v(0.0)).unwrap();
        let lm = logmean(2.0, 1.0);
        let coef = 2.0 * 2.0 * lm / -1.0 * (2.0 * lm - 3.0);
        assert!((i_at_1 - i_at_0 - coef).abs() < 1e-12);
        assert_eq!(i_at_0, 0.0);
    }

    #[test]
    fn formula_agrees_with_the_matched_orbit_at_zero_charge() {
        for lam in [1.0, 1.5] {
            let m = model(0.0, 0.0, 2.0, 1.0, lam, 0.3, 0.7);
            let r = zero_current_fluxes(&m, ZeroCurrentMode::Reversal, &SolverOptions::default()).unwrap();
            assert!((r.j11 - r.j11_orbit).abs() < 1e-8 * r.j11.abs(), "{} vs {}", r.j11, r.j11_orbit);
            assert!(r.n0.abs() < 1e-9);
            assert!((r.j10 - r.j20).abs() < 1e-10 && (r.j11_orbit - r.j21_orbit).abs() < 1e-9);
        }
    }

    #[test]
    fn verification_mode_rejects_a_current_carrying_state() {
        let m = model(0.5, 0.0, 2.0, 1.0, 1.0, 0.3, 0.7);
        assert!(zero_current_fluxes(&m, ZeroCurrentMode::Verification, &SolverOptions::default()).is_err());
        let ok = zero_current_fluxes(&m.with_v(0.0), ZeroCurrentMode::Verification, &SolverOptions::default()).unwrap();
        assert_eq!(ok.v, 0.0);
    }

    #[test]
    fn preconditions_are_enforced() {
        let mut m = model(0.0, 0.0, 2.0, 1.0, 1.0, 0.3, 0.7);
        m.boundary.l2 = 2.5;
        assert!(matches!(ElectroneutralShorthand::new(&m), Err(Error::NonNeutralBoundary { .. })));
        let mut m = model(0.0, 0.0, 2.0, 1.0, 1.0, 0.3, 0.7);
        m.ions.z2 = -2.0;
        m.boundary.l2 = 1.0;
        m.boundary.r2 = 0.5;
        assert!(matches!(critical_voltage(&m), Err(Error::ValenceMismatch { .. })));
    }

    #[test]
    fn reversal_potential_roots_agree() {
        let m = model(0.0, 0.6, 2.0, 1.0, 1.2, 1.0 / 3.0, 2.0 / 3.0);
        let opts = SolverOptions::default();
        let v0 = reversal_potential_zeroth(&m, &opts).unwrap();
        let i0 = solve_matching(&m.with_v(v0), &opts).unwrap().fluxes.i0(&m.ions);
        assert!(i0.abs() < 1e-10);
        let orbit = solve_zero_current_orbit(&m, &opts).unwrap();
        assert!((orbit.v0 - v0).abs() < 1e-9, "{} vs {v0}", orbit.v0);
        assert_eq!(reversal_potential_zeroth(&m.with_q2(0.0), &opts).map(|v| v.abs() < 1e-12), Ok(true));
    }

    #[test]
    fn critical_voltage_is_a_root_of_the_q_derivative() {
        let m = model(0.0, 0.0, 2.0, 1.0, 1.5, 1.0 / 3.0, 2.0 / 3.0);
        let sh = ElectroneutralShorthand::new(&m).unwrap();
        for c in critical_voltages(&sh, &m.ions, DEFAULT_V_RANGE).unwrap() {
            let dq = |v: f64| (zero_current_j11(&sh, v, Q_STEP, &m.ions) - zero_current_j11(&sh, v, 0.0, &m.ions)) / Q_STEP;
            assert!(dq(c.v).abs() < 1e-9);
            assert!(dq(c.v - 0.5) * dq(c.v + 0.5) < 0.0);
        }
    }

    #[test]
    fn q_derivatives_recover_the_combinations() {
        let m = model(0.8, 0.0, 2.0, 1.0, 1.0, 1.0 / 3.0, 2.0 / 3.0);
        let c = interaction_coefficients(&m, &SolverOptions::default()).unwrap();
        assert!((c.i1 - (c.j11_1 - c.j21_1)).abs() < 1e-12);
        assert!((c.t1 - (c.j11_1 + c.j21_1)).abs() < 1e-12);
        assert_eq!(c.t1.signum(), c.m01.signum());
        assert_eq!(c.i1.signum(), c.n01.signum());
        let eq = model(0.0, 0.0, 1.0, 1.0, 1.0, 1.0 / 3.0, 2.0 / 3.0);
        let z = interaction_coefficients(&eq, &SolverOptions::default()).unwrap();
        for v in [z.j11_1, z.j21_1, z.i1, z.t1, z.m01, z.n01] {
            assert!(v.abs() < 1e-6, "{z:?}");
        }
    }
}
