//! Matching of layers and regular layers over `[0, 1]` into the singular orbit.
//!
//! The 21 unknowns are the junction values at `a` and `b` through first order, the four flux
//! coefficients, the slow-manifold potentials `φ^{a,m}`, `φ^{b,m}` on the charged side and `y*`.
//! The zeroth-order block (11 unknowns) is solved first by damped Newton. The first-order
//! block (10 unknowns) is linear once the zeroth block is fixed and takes one linear solve.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ChannelGeometry;
use crate::layers::{layer_limit, JunctionValues, LayerLimit, LayerSide};
use crate::model::{BoundaryData, FluxExpansion, IonPair, ModelSpec};
use crate::numerics::special::logmean;
use crate::regular::{MiddleFirst, MiddleZeroth, NeutralRegion};

pub const N_UNKNOWNS: usize = 21;

pub const UNKNOWN_NAMES: [&str; N_UNKNOWNS] = [
    "phi0_a", "c10_a", "c20_a", "phi1_a", "c11_a", "c21_a", "phi0_b", "c10_b", "c20_b", "phi1_b", "c11_b",
    "c21_b", "J10", "J20", "J11", "J21", "phi0_am", "phi1_am", "phi0_bm", "phi1_bm", "y_star",
];

/// Positions of the zeroth-order unknowns in the full vector.
pub const ZEROTH_UNKNOWNS: [usize; 11] = [0, 1, 2, 6, 7, 8, 12, 13, 16, 18, 20];
/// Positions of the first-order unknowns in the full vector.
pub const FIRST_UNKNOWNS: [usize; 10] = [3, 4, 5, 9, 10, 11, 14, 15, 17, 19];

/// Residual rows: the first 11 involve zeroth-order unknowns only.
pub const RESIDUAL_NAMES: [&str; N_UNKNOWNS] = [
    "u0 at a",
    "u0 at b",
    "J10 on [0,a]",
    "J20 on [0,a]",
    "J10 on [b,1]",
    "J20 on [b,1]",
    "phi0 at y*",
    "c10 at y*",
    "resistance at y*",
    "phi0_am",
    "phi0_bm",
    "u1 at a",
    "u1 at b",
    "J11 on [0,a]",
    "J21 on [0,a]",
    "J11 on [b,1]",
    "J21 on [b,1]",
    "phi1 at y*",
    "c11 at y*",
    "phi1_am",
    "phi1_bm",
];

/// Residual value used for every row when the iterate leaves the feasible region.
pub const INFEASIBLE_PENALTY: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Tolerance on the scaled residual ∞-norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest damping factor tried before giving up.
    pub min_step: f64,
    /// Relative forward-difference step for the Jacobian.
    pub fd_step: f64,
    /// Charge continuation visits `Q 2^{k-n}` for `k = 0..=n`; extra midpoints are inserted on
    /// failure, up to 16 steps in total.
    pub q_doublings: u32,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 60, min_step: 2f64.powi(-20), fd_step: 1e-7, q_doublings: 7 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.min_step > 0.0 && self.min_step < 1.0) || !(self.fd_step > 0.0) {
            return Err(Error::InvalidModel(format!("invalid solver options {self:?}")));
        }
        Ok(())
    }
}

/// Unknowns of the matching system together with their residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingState {
    pub unknowns: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl MatchingState {
    pub fn get(&self, name: &str) -> Option<f64> {
        UNKNOWN_NAMES.iter().position(|n| *n == name).map(|i| self.unknowns[i])
    }
}

/// Limits of the six layers of the orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitLimits {
    pub left: LayerLimit,
    pub a_left: LayerLimit,
    pub a_mid: LayerLimit,
    pub b_mid: LayerLimit,
    pub b_right: LayerLimit,
    pub right: LayerLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveStats {
    pub newton_iterations: usize,
    pub continuation_steps: usize,
    pub zeroth_residual: f64,
    pub first_residual: f64,
}

/// Converged singular orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingSolution {
    pub state: MatchingState,
    pub fluxes: FluxExpansion,
    pub limits: OrbitLimits,
    pub left: NeutralRegion,
    pub middle: MiddleFirst,
    pub right: NeutralRegion,
    pub y_star: f64,
    /// Boundary potential at `x = 0` by order; `v1` is nonzero only in zero-current mode.
    pub v0: f64,
    pub v1: f64,
    pub q: f64,
    pub ions: IonPair,
    pub geometry: ChannelGeometry,
    pub stats: SolveStats,
}

/// Region of `[0, 1]` a profile sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Left,
    Middle,
    Right,
}

impl Region {
    pub fn tag(self) -> &'static str {
        match self {
            Region::Left => "left",
            Region::Middle => "middle",
            Region::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitSample {
    pub region: Region,
    pub x: f64,
    pub phi0: f64,
    pub phi1: f64,
    pub c10: f64,
    pub c11: f64,
    pub c20: f64,
    pub c21: f64,
}

/// Outer profiles of the singular orbit; the layers appear as jumps at `0`, `a`, `b`, `1`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OrbitProfile {
    pub samples: Vec<OrbitSample>,
}

pub const DEFAULT_SAMPLES_PER_REGION: usize = 256;

struct Setup<'a> {
    ions: IonPair,
    bd: BoundaryData,
    geom: &'a ChannelGeometry,
    q: f64,
}

fn junction(x: &[f64], at: usize) -> JunctionValues {
    JunctionValues { phi0: x[at], c10: x[at + 1], c20: x[at + 2], phi1: x[at + 3], c11: x[at + 4], c21: x[at + 5] }
}

struct Orbit {
    limits: OrbitLimits,
    left: NeutralRegion,
    right: NeutralRegion,
    middle: MiddleZeroth,
}

impl Orbit {
    fn build(x: &[f64], v0: f64, v1: f64, s: &Setup) -> Result<Self> {
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InfeasibleState(format!("{} is not finite", UNKNOWN_NAMES[i])));
        }
        if !(x[20] > 0.0) {
            return Err(Error::InfeasibleState(format!("y* = {} must be positive", x[20])));
        }
        let ions = &s.ions;
        let (ja, jb) = (junction(x, 0), junction(x, 6));
        let left_bath = JunctionValues { phi0: v0, phi1: v1, c10: s.bd.l1, c20: s.bd.l2, ..Default::default() };
        let right_bath = JunctionValues::zeroth(0.0, s.bd.r1, s.bd.r2);
        let limits = OrbitLimits {
            left: layer_limit(&left_bath, 0.0, LayerSide::Forward, ions)?,
            a_left: layer_limit(&ja, 0.0, LayerSide::Backward, ions)?,
            a_mid: layer_limit(&ja, s.q, LayerSide::Forward, ions)?,
            b_mid: layer_limit(&jb, s.q, LayerSide::Backward, ions)?,
            b_right: layer_limit(&jb, 0.0, LayerSide::Forward, ions)?,
            right: layer_limit(&right_bath, 0.0, LayerSide::Backward, ions)?,
        };
        let left = crate::regular::outer_left(&limits.left, &limits.a_left, s.geom, ions)?;
        let right = crate::regular::outer_right(&limits.b_right, &limits.right, s.geom, ions)?;
        let middle = MiddleZeroth::new(x[16], limits.a_mid.c10, x[12], x[13], s.q, ions);
        Ok(Self { limits, left, right, middle })
    }

    fn zeroth_rows(&self, x: &[f64], s: &Setup) -> [f64; 11] {
        let l = &self.limits;
        let ys = x[20];
        [
            l.a_left.u0 - l.a_mid.u0,
            l.b_mid.u0 - l.b_right.u0,
            self.left.fluxes.j10 - x[12],
            self.left.fluxes.j20 - x[13],
            self.right.fluxes.j10 - x[12],
            self.right.fluxes.j20 - x[13],
            self.middle.phi0(ys) - x[18],
            self.middle.c10(ys) - l.b_mid.c10,
            self.middle.resistance_gain(ys) - (s.geom.h_b() - s.geom.h_a()),
            x[16] - l.a_mid.phi0,
            x[18] - l.b_mid.phi0,
        ]
    }

    fn middle_first(&self, x: &[f64]) -> MiddleFirst {
        MiddleFirst::new(&self.middle, x[17], self.limits.a_mid.c11, x[14], x[15])
    }

    fn first_rows(&self, x: &[f64]) -> Result<[f64; 10]> {
        let l = &self.limits;
        let (phi1, c11) = self.middle_first(x).at(x[20])?;
        Ok([
            l.a_left.u1 - l.a_mid.u1,
            l.b_mid.u1 - l.b_right.u1,
            self.left.fluxes.j11 - x[14],
            self.left.fluxes.j21 - x[15],
            self.right.fluxes.j11 - x[14],
            self.right.fluxes.j21 - x[15],
            phi1 - x[19],
            c11 - l.b_mid.c11,
            x[17] - l.a_mid.phi1,
            x[19] - l.b_mid.phi1,
        ])
    }
}

fn full_residual(x: &[f64], v0: f64, v1: f64, s: &Setup) -> Result<Vec<f64>> {
    let orbit = Orbit::build(x, v0, v1, s)?;
    let mut r = orbit.zeroth_rows(x, s).to_vec();
    r.extend(orbit.first_rows(x)?);
    Ok(r)
}

fn setup(model: &ModelSpec) -> Setup<'_> {
    Setup { ions: model.ions, bd: model.boundary, geom: &model.geometry, q: model.q2() }
}

/// Residual of the full matching system at fixed boundary potential `V`. Iterates outside the
/// feasible region map to [`INFEASIBLE_PENALTY`] in every row.
pub fn assemble_residual(unknowns: &[f64], model: &ModelSpec) -> Result<Vec<f64>> {
    if unknowns.len() != N_UNKNOWNS {
        return Err(Error::InvalidModel(format!("expected {N_UNKNOWNS} unknowns, got {}", unknowns.len())));
    }
    let s = setup(model);
    Ok(full_residual(unknowns, model.boundary.v, 0.0, &s).unwrap_or_else(|_| vec![INFEASIBLE_PENALTY; N_UNKNOWNS]))
}

/// Row scales: fluxes and concentrations are divided by their typical size at the initial guess.
fn row_scales(x: &[f64], bd: &BoundaryData, geom: &ChannelGeometry) -> Vec<f64> {
    let conc = [bd.l1, bd.l2, bd.r1, bd.r2].iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let flux = 1f64.max(x[12].abs()).max(x[13].abs());
    let pot = 1f64.max(bd.v.abs());
    let res = 1f64.max(geom.h_b() - geom.h_a());
    let zeroth = [1.0, 1.0, flux, flux, flux, flux, pot, conc, res, pot, pot];
    let mut v = zeroth.to_vec();
    v.extend(zeroth.iter().take(2).chain(&[flux, flux, flux, flux, pot, conc, pot, pot]));
    v
}

/// Exact zeroth-order orbit of the uncharged channel, used to start the continuation in `Q`.
fn uncharged_guess(v0: f64, s: &Setup) -> Result<Vec<f64>> {
    let ions = &s.ions;
    let (z1, z2) = (ions.z1, ions.z2);
    let left = layer_limit(&JunctionValues::zeroth(v0, s.bd.l1, s.bd.l2), 0.0, LayerSide::Forward, ions)?;
    let right = layer_limit(&JunctionValues::zeroth(0.0, s.bd.r1, s.bd.r2), 0.0, LayerSide::Backward, ions)?;
    let whole = NeutralRegion::new((&left).into(), (&right).into(), (0.0, 1.0), (0.0, s.geom.h_1()), ions)?;
    let pa = whole.at_resistance(s.geom.h_a());
    let pb = whole.at_resistance(s.geom.h_b());
    let ys = (s.geom.h_b() - s.geom.h_a()) / ((z1 - z2) * z1 * logmean(pa.c10, pb.c10));
    let mut x = vec![0.0; N_UNKNOWNS];
    x[0] = pa.phi0;
    x[1] = pa.c10;
    x[2] = -z1 * pa.c10 / z2;
    x[6] = pb.phi0;
    x[7] = pb.c10;
    x[8] = -z1 * pb.c10 / z2;
    x[12] = whole.fluxes.j10;
    x[13] = whole.fluxes.j20;
    x[16] = pa.phi0;
    x[18] = pb.phi0;
    x[20] = ys;
    Ok(x)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let (mx, mn) = sv.iter().fold((0.0f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
    if mn == 0.0 {
        f64::INFINITY
    } else {
        mx / mn
    }
}

/// Damped Newton with a forward-difference Jacobian. Returns the iteration count and the final
/// scaled residual norm.
fn newton<F>(f: F, x: &mut [f64], scale: &[f64], opts: &SolverOptions) -> Result<(usize, f64)>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let scaled = |y: &[f64]| -> Result<Vec<f64>> {
        let r = f(y)?;
        Ok(r.iter().zip(scale).map(|(a, s)| a / s).collect())
    };
    let mut r = scaled(x)?;
    let mut norm = inf_norm(&r);
    for it in 0..opts.max_iter {
        if norm < opts.tol {
            return Ok((it, norm));
        }
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let h = opts.fd_step * (1.0 + x[j].abs());
            let mut xp = x.to_vec();
            xp[j] += h;
            let (rp, h) = match scaled(&xp) {
                Ok(rp) => (rp, h),
                Err(_) => {
                    xp[j] = x[j] - h;
                    (scaled(&xp)?, -h)
                }
            };
            for i in 0..n {
                jac[(i, j)] = (rp[i] - r[i]) / h;
            }
        }
        let rhs = DVector::from_iterator(n, r.iter().map(|v| -v));
        let dx = match jac.clone().lu().solve(&rhs) {
            Some(dx) if dx.iter().all(|v| v.is_finite()) => dx,
            _ => return Err(Error::SingularJacobian { condition: condition_estimate(&jac) }),
        };
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + step * d).collect();
            if let Ok(rt) = scaled(&trial) {
                let nt = inf_norm(&rt);
                if nt < (1.0 - 1e-4 * step) * norm {
                    log::debug!("newton {it}: residual {norm:.3e} -> {nt:.3e}, step {step}");
                    x.copy_from_slice(&trial);
                    r = rt;
                    norm = nt;
                    break;
                }
            }
            step *= 0.5;
            if step < opts.min_step {
                return Err(Error::NoConvergence { iterations: it, residual: norm });
            }
        }
    }
    if norm < opts.tol {
        Ok((opts.max_iter, norm))
    } else {
        Err(Error::NoConvergence { iterations: opts.max_iter, residual: norm })
    }
}

/// Which boundary potentials are unknown.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    FixedVoltage,
    /// `V0`, `V1` are released and `I0 = I1 = 0` are appended.
    ZeroCurrent,
}

struct Solved {
    x: Vec<f64>,
    v0: f64,
    v1: f64,
    stats: SolveStats,
}

fn zeroth_block(x: &[f64]) -> Vec<f64> {
    ZEROTH_UNKNOWNS.iter().map(|&i| x[i]).collect()
}

fn solve_zeroth(x: &mut Vec<f64>, v0: &mut f64, mode: Mode, s: &Setup, scale: &[f64], opts: &SolverOptions) -> Result<(usize, f64)> {
    let base = x.clone();
    let expand = |z: &[f64]| -> Vec<f64> {
        let mut full = base.clone();
        for (k, &i) in ZEROTH_UNKNOWNS.iter().enumerate() {
            full[i] = z[k];
        }
        full
    };
    let mut z = zeroth_block(x);
    let mut sc: Vec<f64> = scale[..11].to_vec();
    let ions = s.ions;
    let outcome = match mode {
        Mode::FixedVoltage => {
            let v = *v0;
            newton(|z| Ok(Orbit::build(&expand(z), v, 0.0, s)?.zeroth_rows(&expand(z), s).to_vec()), &mut z, &sc, opts)?
        }
        Mode::ZeroCurrent => {
            z.push(*v0);
            sc.push(scale[2]);
            let out = newton(
                |z| {
                    let full = expand(&z[..11]);
                    let mut r = Orbit::build(&full, z[11], 0.0, s)?.zeroth_rows(&full, s).to_vec();
                    r.push(ions.z1 * full[12] + ions.z2 * full[13]);
                    Ok(r)
                },
                &mut z,
                &sc,
                opts,
            )?;
            *v0 = z[11];
            out
        }
    };
    *x = expand(&z[..11]);
    Ok(outcome)
}

/// Solves the first-order block, which is affine in its unknowns, by one linear solve and one
/// refinement step.
fn solve_first(x: &mut [f64], v0: f64, v1: &mut f64, mode: Mode, s: &Setup, scale: &[f64]) -> Result<f64> {
    let extra = usize::from(mode == Mode::ZeroCurrent);
    let n = FIRST_UNKNOWNS.len() + extra;
    let base = x.to_vec();
    let ions = s.ions;
    let eval = |w: &[f64]| -> Result<Vec<f64>> {
        let mut full = base.clone();
        for (k, &i) in FIRST_UNKNOWNS.iter().enumerate() {
            full[i] = w[k];
        }
        let v1 = if extra == 1 { w[10] } else { 0.0 };
        let orbit = Orbit::build(&full, v0, v1, s)?;
        let mut r: Vec<f64> = orbit.first_rows(&full)?.iter().zip(&scale[11..]).map(|(a, b)| a / b).collect();
        if extra == 1 {
            r.push((ions.z1 * full[14] + ions.z2 * full[15]) / scale[2]);
        }
        Ok(r)
    };
    let mut w: Vec<f64> = FIRST_UNKNOWNS.iter().map(|&i| x[i]).collect();
    if extra == 1 {
        w.push(*v1);
    }
    for _ in 0..2 {
        let r0 = eval(&w)?;
        let mut a = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut wp = w.clone();
            wp[j] += 1.0;
            let rp = eval(&wp)?;
            for i in 0..n {
                a[(i, j)] = rp[i] - r0[i];
            }
        }
        let rhs = DVector::from_iterator(n, r0.iter().map(|v| -v));
        let dw = a.clone().lu().solve(&rhs).ok_or_else(|| Error::SingularJacobian { condition: condition_estimate(&a) })?;
        for (wi, d) in w.iter_mut().zip(dw.iter()) {
            *wi += d;
        }
    }
    let norm = inf_norm(&eval(&w)?);
    for (k, &i) in FIRST_UNKNOWNS.iter().enumerate() {
        x[i] = w[k];
    }
    if extra == 1 {
        *v1 = w[10];
    }
    Ok(norm)
}

fn run(model: &ModelSpec, seed: Option<&MatchingSolution>, mode: Mode, opts: &SolverOptions) -> Result<Solved> {
    model.validate()?;
    opts.validate()?;
    let target_q = model.q2();
    let mut stats = SolveStats::default();
    if let Some(seed) = seed {
        let s = setup(model);
        let mut x = seed.state.unknowns.clone();
        let mut v0 = if mode == Mode::ZeroCurrent { seed.v0 } else { model.boundary.v };
        let scale = row_scales(&x, &s.bd, s.geom);
        if let Ok((it, res)) = solve_zeroth(&mut x, &mut v0, mode, &s, &scale, opts) {
            stats.newton_iterations = it;
            stats.zeroth_residual = res;
            let mut v1 = seed.v1;
            stats.first_residual = solve_first(&mut x, v0, &mut v1, mode, &s, &scale)?;
            return Ok(Solved { x, v0, v1, stats });
        }
        log::debug!("seeded solve failed, restarting from the uncharged orbit");
    }
    let s0 = Setup { q: 0.0, ..setup(model) };
    let mut v0 = if mode == Mode::ZeroCurrent { 0.0 } else { model.boundary.v };
    let mut x = uncharged_guess(v0, &s0)?;
    let scale = row_scales(&x, &s0.bd, s0.geom);
    let (it, mut res) = solve_zeroth(&mut x, &mut v0, mode, &s0, &scale, opts)?;
    stats.newton_iterations += it;
    if target_q != 0.0 {
        let n = opts.q_doublings as i32;
        let mut steps: Vec<f64> = (0..=n).map(|k| 2f64.powi(k - n)).collect();
        let mut done = 0.0;
        while let Some(&frac) = steps.first() {
            let s = Setup { q: target_q * frac, ..setup(model) };
            let (mut xt, mut vt) = (x.clone(), v0);
            match solve_zeroth(&mut xt, &mut vt, mode, &s, &scale, opts) {
                Ok((it, r)) => {
                    log::debug!("continuation Q = {}: {it} iterations", s.q);
                    stats.newton_iterations += it;
                    stats.continuation_steps += 1;
                    x = xt;
                    v0 = vt;
                    res = r;
                    done = frac;
                    steps.remove(0);
                }
                Err(e) => {
                    if stats.continuation_steps + steps.len() >= 16 {
                        return Err(e);
                    }
                    steps.insert(0, 0.5 * (done + frac));
                }
            }
        }
    }
    stats.zeroth_residual = res;
    let s = setup(model);
    let mut v1 = 0.0;
    stats.first_residual = solve_first(&mut x, v0, &mut v1, mode, &s, &scale)?;
    Ok(Solved { x, v0, v1, stats })
}

fn finish(model: &ModelSpec, solved: Solved) -> Result<MatchingSolution> {
    let s = setup(model);
    let Solved { x, v0, v1, stats } = solved;
    let orbit = Orbit::build(&x, v0, v1, &s)?;
    let mut residuals = orbit.zeroth_rows(&x, &s).to_vec();
    residuals.extend(orbit.first_rows(&x)?);
    let middle = orbit.middle_first(&x);
    Ok(MatchingSolution {
        fluxes: FluxExpansion { j10: x[12], j20: x[13], j11: x[14], j21: x[15] },
        limits: orbit.limits,
        left: orbit.left,
        middle,
        right: orbit.right,
        y_star: x[20],
        state: MatchingState { unknowns: x, residuals },
        v0,
        v1,
        q: s.q,
        ions: s.ions,
        geometry: model.geometry.clone(),
        stats,
    })
}

/// Singular orbit at the boundary data of `model`.
pub fn solve_matching(model: &ModelSpec, opts: &SolverOptions) -> Result<MatchingSolution> {
    finish(model, run(model, None, Mode::FixedVoltage, opts)?)
}

/// As [`solve_matching`], starting Newton from a nearby solution. Falls back to the full
/// continuation when the seeded iteration fails.
pub fn solve_matching_from(model: &ModelSpec, seed: &MatchingSolution, opts: &SolverOptions) -> Result<MatchingSolution> {
    finish(model, run(model, Some(seed), Mode::FixedVoltage, opts)?)
}

/// Singular orbit with the boundary potential released so that `I0 = I1 = 0`. The result
/// carries the zero-current potential `V0 + V1 d` in `v0`, `v1`.
pub fn solve_zero_current_orbit(model: &ModelSpec, opts: &SolverOptions) -> Result<MatchingSolution> {
    finish(model, run(model, None, Mode::ZeroCurrent, opts)?)
}

pub fn solve_zero_current_orbit_from(model: &ModelSpec, seed: &MatchingSolution, opts: &SolverOptions) -> Result<MatchingSolution> {
    finish(model, run(model, Some(seed), Mode::ZeroCurrent, opts)?)
}

impl MatchingSolution {
    /// Scaled residual ∞-norm of the converged state.
    pub fn residual_norm(&self) -> f64 {
        self.stats.zeroth_residual.max(self.stats.first_residual)
    }

    /// Samples the outer profiles, `per_region` points on each of `[0,a]`, `[a,b]`, `[b,1]`.
    pub fn profile(&self, per_region: usize) -> Result<OrbitProfile> {
        let g = &self.geometry;
        let (z1, z2) = (self.ions.z1, self.ions.z2);
        let n = per_region.max(2);
        let grid = |lo: f64, hi: f64| (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64);
        let mut samples = Vec::with_capacity(3 * n);
        let mut push = |region, x: f64, phi0, phi1, c10: f64, c11: f64, q: f64| {
            samples.push(OrbitSample {
                region,
                x,
                phi0,
                phi1,
                c10,
                c11,
                c20: -(z1 * c10 + q) / z2,
                c21: -z1 * c11 / z2,
            });
        };
        for x in grid(0.0, g.a()) {
            let p = self.left.at(x, g);
            push(Region::Left, x, p.phi0, p.phi1, p.c10, p.c11, 0.0);
        }
        let z = &self.middle.zeroth;
        for x in grid(g.a(), g.b()) {
            let y = if x == g.b() { self.y_star } else { z.y_at_resistance_gain(g.H(x) - g.h_a(), self.y_star) };
            let (phi1, c11) = self.middle.at(y)?;
            push(Region::Middle, x, z.phi0(y), phi1, z.c10(y), c11, self.q);
        }
        for x in grid(g.b(), 1.0) {
            let p = self.right.at(x, g);
            push(Region::Right, x, p.phi0, p.phi1, p.c10, p.c11, 0.0);
        }
        Ok(OrbitProfile { samples })
    }
}

/// Parameter varied by [`continuation_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    V,
    Q,
    D,
    Lambda,
}

impl SweepParameter {
    pub fn apply(self, model: &ModelSpec, value: f64) -> ModelSpec {
        match self {
            SweepParameter::V => model.with_v(value),
            SweepParameter::Q => model.with_q2(value),
            SweepParameter::D => model.with_d(value),
            SweepParameter::Lambda => model.with_lambda(value),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::V => "V",
            SweepParameter::Q => "Q",
            SweepParameter::D => "d",
            SweepParameter::Lambda => "lambda",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub result: Result<FluxExpansion>,
}

/// Solves along a monotone grid, seeding each point with the last converged one. A failed point
/// is recorded and the sweep continues.
pub fn continuation_sweep(model: &ModelSpec, parameter: SweepParameter, grid: &[f64], opts: &SolverOptions) -> Result<Vec<SweepPoint>> {
    let up = grid.windows(2).all(|w| w[1] > w[0]);
    let down = grid.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(Error::InvalidModel(format!("{} grid must be strictly monotone", parameter.name())));
    }
    let mut last: Option<MatchingSolution> = None;
    let mut out = Vec::with_capacity(grid.len());
    for &value in grid {
        let m = parameter.apply(model, value);
        let solved = match &last {
            Some(seed) => solve_matching_from(&m, seed, opts),
            None => solve_matching(&m, opts),
        };
        match solved {
            Ok(sol) => {
                out.push(SweepPoint { value, result: Ok(sol.fluxes) });
                last = Some(sol);
            }
            Err(e) => {
                log::warn!("{} = {value}: {e}", parameter.name());
                out.push(SweepPoint { value, result: Err(e) });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AreaProfile;

    fn model(v: f64, q: f64, l: (f64, f64), r: (f64, f64), lambda: f64) -> ModelSpec {
        ModelSpec::new(
            IonPair::new(1.0, -1.0, 0.0, lambda).unwrap(),
            BoundaryData { v, l1: l.0, l2: l.1, r1: r.0, r2: r.1 },
            ChannelGeometry::uniform(1.0 / 3.0, 2.0 / 3.0).unwrap(),
            q,
            1e-4,
        )
        .unwrap()
    }

    #[test]
    fn reference_fluxes_at_unit_voltage() {
        // independent Python prototype (scipy hybr + the same layer and region formulas)
        let sol = solve_matching(&model(1.0, 0.5, (2.0, 2.0), (1.0, 1.0), 1.0), &SolverOptions::default()).unwrap();
        let f = sol.fluxes;
        for (got, want) in [(f.j10, 2.3016772912), (f.j20, -0.4645974161), (f.j11, 5.9556981027), (f.j21, 5.9654710497)] {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
        assert!(inf_norm(&sol.state.residuals) < 1e-9);
    }

    #[test]
    fn equilibrium_has_zero_flux_for_any_charge() {
        for q in [-1.0, 0.0, 1.0] {
            let sol = solve_matching(&model(0.0, q, (1.5, 1.5), (1.5, 1.5), 1.3), &SolverOptions::default()).unwrap();
            let f = sol.fluxes;
            for j in [f.j10, f.j20, f.j11, f.j21] {
                assert!(j.abs() < 1e-10, "Q = {q}: {f:?}");
            }
        }
    }

    #[test]
    fn constant_state_has_zero_residual() {
        let m = model(0.0, 0.0, (2.0, 2.0), (2.0, 2.0), 1.0);
        let mut x = vec![0.0; N_UNKNOWNS];
        x[1] = 2.0;
        x[2] = 2.0;
        x[7] = 2.0;
        x[8] = 2.0;
        x[20] = (1.0 / 3.0) / 4.0;
        let r = assemble_residual(&x, &m).unwrap();
        assert!(inf_norm(&r) < 1e-15, "{r:?}");
    }

    #[test]
    fn infeasible_state_is_penalized() {
        let m = model(0.0, 0.0, (2.0, 2.0), (2.0, 2.0), 1.0);
        let mut x = vec![0.0; N_UNKNOWNS];
        x[1] = -1.0;
        x[20] = 0.1;
        assert_eq!(assemble_residual(&x, &m).unwrap(), vec![INFEASIBLE_PENALTY; N_UNKNOWNS]);
    }

    #[test]
    fn uncharged_solution_is_the_single_region_closed_form() {
        let m = model(-0.7, 0.0, (2.0, 2.0), (0.5, 0.5), 1.4);
        let sol = solve_matching(&m, &SolverOptions::default()).unwrap();
        let ions = m.ions;
        let l = layer_limit(&JunctionValues::zeroth(-0.7, 2.0, 2.0), 0.0, LayerSide::Forward, &ions).unwrap();
        let r = layer_limit(&JunctionValues::zeroth(0.0, 0.5, 0.5), 0.0, LayerSide::Backward, &ions).unwrap();
        let whole = NeutralRegion::new((&l).into(), (&r).into(), (0.0, 1.0), (0.0, 1.0), &ions).unwrap();
        assert!((sol.fluxes.j10 - whole.fluxes.j10).abs() < 1e-10);
        assert!((sol.fluxes.j20 - whole.fluxes.j20).abs() < 1e-10);
        assert!((sol.fluxes.j11 - whole.fluxes.j11).abs() < 1e-8);
        assert!((sol.fluxes.j21 - whole.fluxes.j21).abs() < 1e-8);
    }

    #[test]
    fn zeroth_rows_ignore_first_order_unknowns() {
        let m = model(0.4, 0.6, (2.0, 2.0), (1.0, 1.0), 0.8);
        let sol = solve_matching(&m, &SolverOptions::default()).unwrap();
        let base = assemble_residual(&sol.state.unknowns, &m).unwrap();
        for &j in &FIRST_UNKNOWNS {
            let mut x = sol.state.unknowns.clone();
            x[j] += 0.1;
            let r = assemble_residual(&x, &m).unwrap();
            assert_eq!(&r[..11], &base[..11], "{} leaked into the zeroth block", UNKNOWN_NAMES[j]);
        }
    }

    /// Rows that may depend on each unknown, from the structure of the orbit.
    fn dependents(j: usize) -> Vec<usize> {
        // zeroth rows: u0a u0b J10L J20L J10R J20R phi0y c10y res phi0am phi0bm
        // first rows: u1a u1b J11L J21L J11R J21R phi1y c11y phi1am phi1bm
        match UNKNOWN_NAMES[j] {
            "phi0_a" => vec![2, 3, 9, 11, 13, 14, 17, 18, 19],
            "c10_a" | "c20_a" => vec![0, 2, 3, 6, 7, 8, 9, 11, 13, 14, 17, 18, 19],
            "phi1_a" => vec![13, 14, 19],
            "c11_a" | "c21_a" => vec![11, 13, 14, 17, 18, 19],
            "phi0_b" => vec![4, 5, 10, 12, 15, 16, 18, 20],
            "c10_b" | "c20_b" => vec![1, 4, 5, 7, 10, 12, 15, 16, 18, 20],
            "phi1_b" => vec![15, 16, 20],
            "c11_b" | "c21_b" => vec![12, 15, 16, 18, 20],
            "J10" | "J20" => vec![2, 3, 4, 5, 6, 7, 8, 17, 18],
            "J11" | "J21" => vec![13, 14, 15, 16, 17, 18],
            "phi0_am" => vec![6, 9],
            "phi1_am" => vec![17, 19],
            "phi0_bm" => vec![6, 10],
            "phi1_bm" => vec![17, 20],
            "y_star" => vec![6, 7, 8, 17, 18],
            _ => unreachable!(),
        }
    }

    #[test]
    fn sensitivity_pattern_matches_the_dependency_graph() {
        let m = model(0.4, 0.6, (2.0, 1.5), (1.0, 1.2), 0.8);
        let sol = solve_matching(&m, &SolverOptions::default()).unwrap();
        let base = assemble_residual(&sol.state.unknowns, &m).unwrap();
        for j in 0..N_UNKNOWNS {
            let mut x = sol.state.unknowns.clone();
            x[j] += 1e-3 * (1.0 + x[j].abs());
            let r = assemble_residual(&x, &m).unwrap();
            let changed: Vec<usize> = (0..N_UNKNOWNS).filter(|&i| (r[i] - base[i]).abs() > 1e-12).collect();
            let allowed = dependents(j);
            for i in &changed {
                assert!(allowed.contains(i), "{} changed row {}", UNKNOWN_NAMES[j], RESIDUAL_NAMES[*i]);
            }
            // every unknown feeds its own defining rows
            assert!(!changed.is_empty(), "{} changes nothing", UNKNOWN_NAMES[j]);
        }
    }

    #[test]
    fn seeded_solve_matches_a_fresh_solve() {
        let m = model(0.5, 0.5, (2.0, 2.0), (1.0, 1.0), 1.0);
        let seed = solve_matching(&m.with_v(0.4), &SolverOptions::default()).unwrap();
        let a = solve_matching_from(&m, &seed, &SolverOptions::default()).unwrap();
        let b = solve_matching(&m, &SolverOptions::default()).unwrap();
        assert!((a.fluxes.j10 - b.fluxes.j10).abs() < 1e-9);
        assert!((a.fluxes.j21 - b.fluxes.j21).abs() < 1e-8);
    }

    #[test]
    fn mirrored_channel_negates_the_current() {
        let area = AreaProfile::Bump { base: 1.0, depth: 0.5, center: 0.5, width: 0.2 };
        let geom = ChannelGeometry::new(area, 0.3, 0.6).unwrap();
        let ions = IonPair::new(1.0, -1.0, 0.0, 1.0).unwrap();
        let m = ModelSpec::new(ions, BoundaryData { v: 0.8, l1: 2.0, l2: 2.0, r1: 1.0, r2: 1.0 }, geom.clone(), 0.5, 1e-4).unwrap();
        let mm = ModelSpec::new(
            ions,
            BoundaryData { v: -0.8, l1: 1.0, l2: 1.0, r1: 2.0, r2: 2.0 },
            geom.mirrored().unwrap(),
            0.5,
            1e-4,
        )
        .unwrap();
        let a = solve_matching(&m, &SolverOptions::default()).unwrap();
        let b = solve_matching(&mm, &SolverOptions::default()).unwrap();
        assert!((a.fluxes.i0(&ions) + b.fluxes.i0(&ions)).abs() < 1e-8);
    }

    #[test]
    fn zero_current_orbit_has_no_current() {
        let m = model(0.0, 0.4, (2.0, 2.0), (1.0, 1.0), 1.5);
        let sol = solve_zero_current_orbit(&m, &SolverOptions::default()).unwrap();
        let f = sol.fluxes;
        assert!(f.i0(&m.ions).abs() < 1e-10);
        assert!(f.i1(&m.ions).abs() < 1e-9);
        assert!((f.j10 - f.j20).abs() < 1e-10 && (f.j11 - f.j21).abs() < 1e-9);
        assert!(sol.v1 != 0.0);
    }

    #[test]
    fn profile_is_continuous_across_regular_layers() {
        let m = model(1.0, 0.5, (2.0, 2.0), (1.0, 1.0), 1.0);
        let sol = solve_matching(&m, &SolverOptions::default()).unwrap();
        let p = sol.profile(64).unwrap();
        assert_eq!(p.samples.len(), 192);
        let mid: Vec<_> = p.samples.iter().filter(|s| s.region == Region::Middle).collect();
        let first = mid.first().unwrap();
        let last = mid.last().unwrap();
        assert!((first.c10 - sol.limits.a_mid.c10).abs() < 1e-12);
        assert!((last.c10 - sol.limits.b_mid.c10).abs() < 1e-9);
        assert!((last.c11 - sol.limits.b_mid.c11).abs() < 1e-8);
        for s in &p.samples {
            assert!((s.c20 * -1.0 + s.c10 + if s.region == Region::Middle { 0.5 } else { 0.0 }).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_through_equilibrium_crosses_zero() {
        let m = model(0.0, 0.0, (1.0, 1.0), (1.0, 1.0), 1.0);
        let grid = [-0.5, -0.25, 0.0, 0.25, 0.5];
        let pts = continuation_sweep(&m, SweepParameter::V, &grid, &SolverOptions::default()).unwrap();
        let i: Vec<f64> = pts.iter().map(|p| p.result.as_ref().unwrap().i0(&m.ions)).collect();
        assert!(i[2].abs() < 1e-9);
        assert!(i.windows(2).all(|w| w[1] > w[0]));
        assert!(continuation_sweep(&m, SweepParameter::V, &[0.0, 1.0, 0.5], &SolverOptions::default()).is_err());
    }
}
