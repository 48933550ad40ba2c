use serde::{Deserialize, Serialize};

use super::solver::{solve_bvp_ladder, BvpOptions};
use crate::error::{Error, Result};
use crate::matching::{solve_matching, SolverOptions};
use crate::model::ModelSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub epsilon: f64,
    pub d: f64,
    pub j1: f64,
    pub j2: f64,
    pub j1_asymptotic: f64,
    pub j2_asymptotic: f64,
    pub abs_error: [f64; 2],
    /// Absolute error over `|J_k0 + J_k1 d|`; absolute when that vanishes.
    pub rel_error: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    /// Per `d`: least-squares slope of `ln |error|` against `ln ε` for each species.
    pub epsilon_order: Vec<(f64, [f64; 2])>,
    /// At the smallest `ε`: least-squares slope of `ln |error|` against `ln d` over `d > 0`.
    pub d_slope: Option<[f64; 2]>,
}

impl ComparisonTable {
    /// Rows for one `d`, in order of decreasing `ε`.
    pub fn rows_for_d(&self, d: f64) -> Vec<&ComparisonRow> {
        let mut rows: Vec<_> = self.rows.iter().filter(|r| r.d == d).collect();
        rows.sort_by(|a, b| b.epsilon.partial_cmp(&a.epsilon).unwrap());
        rows
    }

    /// Like [`Self::decreasing_in_epsilon`] but allowing growth up to `1e-10 max(1, |J_k0 + J_k1 d|)`,
    /// the residual tolerance of the direct solver.
    pub fn non_increasing_in_epsilon(&self, d: f64) -> bool {
        let rows = self.rows_for_d(d);
        rows.windows(2).all(|w| {
            let slack = [w[1].j1_asymptotic, w[1].j2_asymptotic].map(|a| 1e-10 * a.abs().max(1.0));
            (0..2).all(|k| w[1].abs_error[k] <= w[0].abs_error[k] + slack[k])
        })
    }

    /// Whether the error of both species shrinks at every `ε` step for this `d`.
    pub fn decreasing_in_epsilon(&self, d: f64) -> bool {
        self.rows_for_d(d).windows(2).all(|w| (0..2).all(|k| w[1].abs_error[k] < w[0].abs_error[k]))
    }
}

/// Least-squares slope of `ln y` against `ln x`, skipping non-positive entries.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Direct fluxes against `J_k0 + J_k1 d` from the matching solver over `eps_grid × d_grid`.
pub fn asymptotic_comparison(
    model: &ModelSpec,
    eps_grid: &[f64],
    d_grid: &[f64],
    bvp: &BvpOptions,
    matching: &SolverOptions,
) -> Result<ComparisonTable> {
    if eps_grid.is_empty() || d_grid.is_empty() {
        return Err(Error::InvalidModel("comparison grids must not be empty".into()));
    }
    let expansion = solve_matching(&model.with_d(0.0), matching)?.fluxes;
    let mut rows = Vec::new();
    for &d in d_grid {
        let (a1, a2) = expansion.at(d);
        let profiles = solve_bvp_ladder(&model.with_d(d), eps_grid, bvp)?;
        for (p, &eps) in profiles.iter().zip(eps_grid) {
            let abs_error = [(p.j1 - a1).abs(), (p.j2 - a2).abs()];
            let rel = |e: f64, a: f64| if a == 0.0 { e } else { e / a.abs() };
            rows.push(ComparisonRow {
                epsilon: eps,
                d,
                j1: p.j1,
                j2: p.j2,
                j1_asymptotic: a1,
                j2_asymptotic: a2,
                abs_error,
                rel_error: [rel(abs_error[0], a1), rel(abs_error[1], a2)],
            });
        }
    }
    let slope = |rows: &[&ComparisonRow], key: fn(&ComparisonRow) -> f64| -> Option<[f64; 2]> {
        let x: Vec<f64> = rows.iter().map(|r| key(r)).collect();
        let s1 = log_log_slope(&x, &rows.iter().map(|r| r.abs_error[0]).collect::<Vec<_>>())?;
        let s2 = log_log_slope(&x, &rows.iter().map(|r| r.abs_error[1]).collect::<Vec<_>>())?;
        Some([s1, s2])
    };
    let mut epsilon_order = Vec::new();
    for &d in d_grid {
        let sel: Vec<&ComparisonRow> = rows.iter().filter(|r| r.d == d).collect();
        if let Some(s) = slope(&sel, |r| r.epsilon) {
            epsilon_order.push((d, s));
        }
    }
    let eps_min = eps_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let at_min: Vec<&ComparisonRow> = rows.iter().filter(|r| r.epsilon == eps_min && r.d > 0.0).collect();
    let d_slope = slope(&at_min, |r| r.d);
    Ok(ComparisonTable { rows, epsilon_order, d_slope })
}
