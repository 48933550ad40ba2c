use log::debug;
use serde::{Deserialize, Serialize};

use super::mesh::Mesh;
use crate::error::{Error, Result};
use crate::model::{hs_chemical_potential_with_jacobian, ModelSpec};
use crate::numerics::banded::BandMatrix;
use crate::numerics::special::{bernoulli, bernoulli_derivative};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BvpOptions {
    pub nodes: usize,
    pub layer_fraction: f64,
    /// First `ε` of the continuation ladder.
    pub eps_start: f64,
    /// Largest ratio between consecutive `ε` on the ladder.
    pub eps_ratio: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Largest slope change of `φ` or `ln c_k` between neighbouring cells.
    pub jump_max: f64,
}

impl Default for BvpOptions {
    fn default() -> Self {
        Self { nodes: 2000, layer_fraction: 0.4, eps_start: 0.1, eps_ratio: 3.0, tol: 1e-10, max_iter: 60, jump_max: 0.05 }
    }
}

impl BvpOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.nodes >= 20
            && (0.0..1.0).contains(&self.layer_fraction)
            && self.eps_start > 0.0
            && self.eps_ratio > 1.0
            && self.tol > 0.0
            && self.max_iter > 0
            && self.jump_max > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("invalid direct solver options {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BvpStats {
    pub newton_iterations: usize,
    pub continuation_steps: usize,
    /// Max-norm of the discrete residual.
    pub residual: f64,
    /// Largest difference between cell fluxes of one species.
    pub flux_spread: f64,
}

/// Converged discrete solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    /// `ε φ'` by central differences.
    pub u: Vec<f64>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub j1: f64,
    pub j2: f64,
    pub epsilon: f64,
    pub d: f64,
    pub stats: BvpStats,
}

impl Profile {
    /// Linear interpolation of `(φ, c1, c2)` at `x`.
    pub fn interpolate(&self, x: f64) -> (f64, f64, f64) {
        let k = match self.x.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => return (self.phi[i], self.c1[i], self.c2[i]),
            Err(i) => i.clamp(1, self.x.len() - 1) - 1,
        };
        let t = (x - self.x[k]) / (self.x[k + 1] - self.x[k]);
        let lerp = |v: &[f64]| v[k] + t * (v[k + 1] - v[k]);
        (lerp(&self.phi), lerp(&self.c1), lerp(&self.c2))
    }
}

/// Finite-volume form of the steady system on a fixed mesh.
///
/// Unknowns are `(φ, c1, c2)` at interior nodes, interleaved. With `ψ_k = z_k φ + μ_k^HS`, the flux
/// of species `k` through cell `[x_i, x_{i+1}]` is the exponentially fitted
/// `(c_i B(Δψ) - c_{i+1} B(-Δψ)) / ΔH`, `ΔH = ∫ ds/h`. Each interior node carries
/// `ε² [φ'/H']` differences plus the enclosed charge for Poisson, and the flux difference of its two
/// cells for each species, so a solution has one flux per species in every cell.
pub struct DiscreteSystem<'m> {
    model: &'m ModelSpec,
    x: Vec<f64>,
    dh: Vec<f64>,
    volume: Vec<f64>,
    fixed_charge: Vec<f64>,
}

/// Node values plus the partials of `ψ_k` with respect to `(c1, c2)`.
struct NodeState {
    psi: [f64; 2],
    dpsi_dc: [[f64; 2]; 2],
}

impl<'m> DiscreteSystem<'m> {
    pub fn new(model: &'m ModelSpec, mesh: &Mesh) -> Result<Self> {
        let g = &model.geometry;
        let x = mesh.nodes().to_vec();
        let n = x.len();
        if x.binary_search_by(|v| v.partial_cmp(&g.a()).unwrap()).is_err()
            || x.binary_search_by(|v| v.partial_cmp(&g.b()).unwrap()).is_err()
        {
            return Err(Error::InvalidModel("mesh does not contain the channel junctions".into()));
        }
        let hs: Vec<f64> = x.iter().map(|&p| g.H(p)).collect();
        let dh: Vec<f64> = hs.windows(2).map(|w| w[1] - w[0]).collect();
        let mut volume = vec![0.0; n];
        let mut fixed_charge = vec![0.0; n];
        for i in 0..n {
            let lo = if i == 0 { x[0] } else { 0.5 * (x[i - 1] + x[i]) };
            let hi = if i == n - 1 { x[n - 1] } else { 0.5 * (x[i] + x[i + 1]) };
            volume[i] = g.area().area_integral(lo, hi);
            let (qlo, qhi) = (lo.max(g.a()), hi.min(g.b()));
            if qhi > qlo {
                fixed_charge[i] = model.q2() * g.area().area_integral(qlo, qhi);
            }
        }
        Ok(Self { model, x, dh, volume, fixed_charge })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn n_unknowns(&self) -> usize {
        3 * (self.x.len() - 2)
    }

    /// Full node arrays with the boundary values attached.
    pub fn expand(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let bd = &self.model.boundary;
        let n = self.x.len();
        let mut phi = vec![0.0; n];
        let mut c1 = vec![0.0; n];
        let mut c2 = vec![0.0; n];
        (phi[0], c1[0], c2[0]) = (bd.v, bd.l1, bd.l2);
        (phi[n - 1], c1[n - 1], c2[n - 1]) = (0.0, bd.r1, bd.r2);
        for i in 1..n - 1 {
            let k = 3 * (i - 1);
            (phi[i], c1[i], c2[i]) = (u[k], u[k + 1], u[k + 2]);
        }
        (phi, c1, c2)
    }

    pub fn pack(&self, phi: &[f64], c1: &[f64], c2: &[f64]) -> Vec<f64> {
        let n = self.x.len();
        let mut u = Vec::with_capacity(3 * (n - 2));
        for i in 1..n - 1 {
            u.extend([phi[i], c1[i], c2[i]]);
        }
        u
    }

    fn node_states(&self, phi: &[f64], c1: &[f64], c2: &[f64]) -> Result<Vec<NodeState>> {
        let ions = &self.model.ions;
        (0..phi.len())
            .map(|i| {
                if !(c1[i] > 0.0 && c2[i] > 0.0) {
                    return Err(Error::InfeasibleState(format!("non-positive concentration at x = {}", self.x[i])));
                }
                let ((m1, m2), (a11, a12, a22)) = hs_chemical_potential_with_jacobian(c1[i], c2[i], ions)?;
                Ok(NodeState {
                    psi: [ions.z1 * phi[i] + m1, ions.z2 * phi[i] + m2],
                    dpsi_dc: [[a11, a12], [a12, a22]],
                })
            })
            .collect()
    }

    /// Flux of each species through every cell.
    pub fn cell_fluxes(&self, u: &[f64]) -> Result<[Vec<f64>; 2]> {
        let (phi, c1, c2) = self.expand(u);
        let st = self.node_states(&phi, &c1, &c2)?;
        let c = [&c1, &c2];
        Ok([0, 1].map(|k| {
            (0..self.dh.len())
                .map(|i| {
                    let dpsi = st[i + 1].psi[k] - st[i].psi[k];
                    (c[k][i] * bernoulli(dpsi) - c[k][i + 1] * bernoulli(-dpsi)) / self.dh[i]
                })
                .collect()
        }))
    }

    /// Residual and, on request, its banded Jacobian.
    pub fn residual(&self, u: &[f64], jacobian: bool) -> Result<(Vec<f64>, Option<BandMatrix>)> {
        let ions = &self.model.ions;
        let z = [ions.z1, ions.z2];
        let eps2 = self.model.epsilon * self.model.epsilon;
        let n = self.x.len();
        let (phi, c1, c2) = self.expand(u);
        let st = self.node_states(&phi, &c1, &c2)?;
        let c = [&c1, &c2];
        let m = self.n_unknowns();
        let mut r = vec![0.0; m];
        let mut jac = jacobian.then(|| BandMatrix::zeros(m, 5, 5));
        let col = |node: usize, var: usize| (node >= 1 && node <= n - 2).then(|| 3 * (node - 1) + var);

        for i in 1..n - 1 {
            let row = 3 * (i - 1);
            let v = self.volume[i];
            let (gl, gr) = (eps2 / self.dh[i - 1], eps2 / self.dh[i]);
            r[row] = (gr * (phi[i + 1] - phi[i]) - gl * (phi[i] - phi[i - 1]) + (z[0] * c1[i] + z[1] * c2[i]) * v
                + self.fixed_charge[i])
                / v;
            if let Some(jm) = jac.as_mut() {
                jm.add(row, row, -(gl + gr) / v);
                jm.add(row, row + 1, z[0]);
                jm.add(row, row + 2, z[1]);
                if let Some(cj) = col(i - 1, 0) {
                    jm.add(row, cj, gl / v);
                }
                if let Some(cj) = col(i + 1, 0) {
                    jm.add(row, cj, gr / v);
                }
            }
        }

        for cell in 0..n - 1 {
            let (lo, hi) = (cell, cell + 1);
            for k in 0..2 {
                let dpsi = st[hi].psi[k] - st[lo].psi[k];
                let (bp, bm) = (bernoulli(dpsi), bernoulli(-dpsi));
                let dh = self.dh[cell];
                let flux = (c[k][lo] * bp - c[k][hi] * bm) / dh;
                // a cell flux leaves its left node and enters its right node
                let rows = [(lo, -1.0), (hi, 1.0)];
                for &(node, sign) in &rows {
                    if node >= 1 && node <= n - 2 {
                        r[3 * (node - 1) + 1 + k] += sign * flux;
                    }
                }
                let Some(jm) = jac.as_mut() else { continue };
                let df_ddpsi = (c[k][lo] * bernoulli_derivative(dpsi) + c[k][hi] * bernoulli_derivative(-dpsi)) / dh;
                for (node, s) in [(lo, -1.0), (hi, 1.0)] {
                    let direct = if node == lo { bp / dh } else { -bm / dh };
                    let partials = [
                        s * df_ddpsi * z[k],
                        s * df_ddpsi * st[node].dpsi_dc[k][0] + if k == 0 { direct } else { 0.0 },
                        s * df_ddpsi * st[node].dpsi_dc[k][1] + if k == 1 { direct } else { 0.0 },
                    ];
                    for (var, p) in partials.iter().enumerate() {
                        let Some(cj) = col(node, var) else { continue };
                        for &(rnode, sign) in &rows {
                            if rnode >= 1 && rnode <= n - 2 {
                                jm.add(3 * (rnode - 1) + 1 + k, cj, sign * p);
                            }
                        }
                    }
                }
            }
        }
        Ok((r, jac))
    }

    fn feasible(&self, u: &[f64]) -> bool {
        let ions = &self.model.ions;
        u.chunks(3).all(|v| v[1] > 0.0 && v[2] > 0.0 && 1.0 - ions.d1() * v[1] - ions.d2() * v[2] > 0.0)
    }

    /// Damped Newton from `u`. Steps are halved until the iterate stays positive and the residual
    /// decreases.
    pub fn newton(&self, mut u: Vec<f64>, opts: &BvpOptions) -> Result<(Vec<f64>, usize, f64)> {
        let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let (mut r, mut jac) = self.residual(&u, true)?;
        let mut norm = inf(&r);
        for it in 0..opts.max_iter {
            if norm < opts.tol {
                return Ok((u, it, norm));
            }
            let lu = jac.take().unwrap().factorize()?;
            let mut du: Vec<f64> = r.iter().map(|v| -v).collect();
            lu.solve_in_place(&mut du);
            let mut lambda = 1.0;
            let accepted = loop {
                let trial: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + lambda * b).collect();
                if self.feasible(&trial) {
                    if let Ok((rt, jt)) = self.residual(&trial, true) {
                        let nt = inf(&rt);
                        if nt < (1.0 - 0.1 * lambda) * norm || lambda < 1e-3 {
                            break Some((trial, rt, jt, nt));
                        }
                    }
                }
                lambda *= 0.5;
                if lambda < 1e-6 {
                    break None;
                }
            };
            let Some((trial, rt, jt, nt)) = accepted else {
                return Err(Error::NoConvergence { iterations: it, residual: norm });
            };
            let step = lambda * inf(&du);
            let scale = 1.0 + inf(&trial);
            u = trial;
            r = rt;
            jac = jt;
            norm = nt;
            debug!("newton {it}: residual {norm:e}, damping {lambda}");
            if step < 1e-13 * scale && norm < 1e3 * opts.tol {
                return Ok((u, it + 1, norm));
            }
        }
        if norm < opts.tol {
            Ok((u, opts.max_iter, norm))
        } else {
            Err(Error::NoConvergence { iterations: opts.max_iter, residual: norm })
        }
    }
}

/// Largest change of slope between neighbouring cells in `φ`, `ln c1` or `ln c2`, with the node where
/// it occurs. A layer that the mesh resolves changes the per-cell increments gradually; an
/// unresolved one concentrates its charge in single cells and kinks the increments there.
pub fn jump_indicator(x: &[f64], phi: &[f64], c1: &[f64], c2: &[f64]) -> (f64, f64) {
    let (l1, l2): (Vec<f64>, Vec<f64>) = (c1.iter().map(|c| c.ln()).collect(), c2.iter().map(|c| c.ln()).collect());
    let mut worst = (0.0, 0.0);
    for i in 1..x.len() - 1 {
        let kink = |v: &[f64]| ((v[i + 1] - v[i]) - (v[i] - v[i - 1])).abs();
        let j = kink(phi).max(kink(&l1)).max(kink(&l2));
        if j > worst.0 {
            worst = (j, x[i]);
        }
    }
    worst
}

/// Solves on `mesh` starting from `guess` (interpolated) or from the linear profile between the
/// baths.
pub fn solve_bvp(model: &ModelSpec, mesh: &Mesh, guess: Option<&Profile>, opts: &BvpOptions) -> Result<Profile> {
    model.validate()?;
    opts.validate()?;
    if !(model.epsilon > 0.0) {
        return Err(Error::InvalidModel("the direct solver needs eps > 0".into()));
    }
    let sys = DiscreteSystem::new(model, mesh)?;
    let bd = &model.boundary;
    let x = sys.nodes();
    let (phi, c1, c2): (Vec<f64>, Vec<f64>, Vec<f64>) = match guess {
        Some(p) => {
            let v: Vec<_> = x.iter().map(|&s| p.interpolate(s)).collect();
            (v.iter().map(|t| t.0).collect(), v.iter().map(|t| t.1).collect(), v.iter().map(|t| t.2).collect())
        }
        None => (
            x.iter().map(|&s| bd.v * (1.0 - s)).collect(),
            x.iter().map(|&s| bd.l1 + (bd.r1 - bd.l1) * s).collect(),
            x.iter().map(|&s| bd.l2 + (bd.r2 - bd.l2) * s).collect(),
        ),
    };
    let (u, iterations, residual) = sys.newton(sys.pack(&phi, &c1, &c2), opts)?;
    finish(&sys, model, &u, iterations, residual, opts)
}

fn finish(sys: &DiscreteSystem, model: &ModelSpec, u: &[f64], iterations: usize, residual: f64, opts: &BvpOptions) -> Result<Profile> {
    let (phi, c1, c2) = sys.expand(u);
    let x = sys.nodes().to_vec();
    let (jump, at) = jump_indicator(&x, &phi, &c1, &c2);
    if jump > opts.jump_max {
        return Err(Error::MeshTooCoarse { x: at, jump });
    }
    let [f1, f2] = sys.cell_fluxes(u)?;
    let mean = |f: &[f64]| f.iter().sum::<f64>() / f.len() as f64;
    let spread = |f: &[f64]| {
        let (lo, hi) = f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        hi - lo
    };
    let n = x.len();
    let eps = model.epsilon;
    let u_field: Vec<f64> = (0..n)
        .map(|i| {
            let (l, r) = (i.saturating_sub(1), (i + 1).min(n - 1));
            eps * (phi[r] - phi[l]) / (x[r] - x[l])
        })
        .collect();
    Ok(Profile {
        j1: mean(&f1),
        j2: mean(&f2),
        stats: BvpStats { newton_iterations: iterations, continuation_steps: 0, residual, flux_spread: spread(&f1).max(spread(&f2)) },
        x,
        phi,
        u: u_field,
        c1,
        c2,
        epsilon: eps,
        d: model.ions.d,
    })
}

/// Solves at each `ε` of `eps_list` (any order; returned in the given order) by continuation in `ε`
/// from `opts.eps_start`, on a graded mesh rebuilt for every `ε`. A failed step is retried with the
/// geometric mean of its endpoints inserted, up to six times.
pub fn solve_bvp_ladder(model: &ModelSpec, eps_list: &[f64], opts: &BvpOptions) -> Result<Vec<Profile>> {
    opts.validate()?;
    if eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidModel("eps values must be positive".into()));
    }
    let mut targets: Vec<f64> = eps_list.to_vec();
    targets.sort_by(|a, b| b.partial_cmp(a).unwrap());
    targets.dedup();
    let g = &model.geometry;
    let mesh_for = |eps: f64| Mesh::graded(eps, g.a(), g.b(), opts.nodes, opts.layer_fraction);
    let solve_at = |eps: f64, guess: Option<&Profile>| solve_bvp(&model.with_epsilon(eps), &mesh_for(eps)?, guess, opts);

    let start = opts.eps_start.max(targets[0]);
    let mut current = match solve_at(start, None) {
        Ok(p) => p,
        // hard starts: continue in V from 0 at the first ε
        Err(_) => {
            let mut p = solve_at_potential(model, start, 0.0, None, opts, &mesh_for)?;
            for k in 1..=8 {
                p = solve_at_potential(model, start, model.boundary.v * k as f64 / 8.0, Some(&p), opts, &mesh_for)?;
            }
            p
        }
    };
    let mut steps = 1;
    let mut solved: Vec<(f64, Profile)> = Vec::new();
    for &target in &targets {
        while current.epsilon > target * (1.0 + 1e-12) {
            let mut next = (current.epsilon / opts.eps_ratio).max(target);
            let mut attempt = 0;
            let profile = loop {
                match solve_at(next, Some(&current)) {
                    Ok(p) => break p,
                    Err(e) if attempt >= 6 => return Err(e),
                    Err(_) => {
                        next = (next * current.epsilon).sqrt();
                        attempt += 1;
                    }
                }
            };
            steps += 1;
            current = profile;
        }
        let mut p = current.clone();
        p.stats.continuation_steps = steps;
        solved.push((target, p));
    }
    Ok(eps_list
        .iter()
        .map(|e| solved.iter().find(|(t, _)| t == e).map(|(_, p)| p.clone()).expect("every target is solved"))
        .collect())
}

fn solve_at_potential(
    model: &ModelSpec,
    eps: f64,
    v: f64,
    guess: Option<&Profile>,
    opts: &BvpOptions,
    mesh_for: &dyn Fn(f64) -> Result<Mesh>,
) -> Result<Profile> {
    solve_bvp(&model.with_v(v).with_epsilon(eps), &mesh_for(eps)?, guess, opts)
}

/// Solves at the model's own `ε` by continuation.
pub fn solve_bvp_continued(model: &ModelSpec, opts: &BvpOptions) -> Result<Profile> {
    Ok(solve_bvp_ladder(model, &[model.epsilon], opts)?.remove(0))
}
