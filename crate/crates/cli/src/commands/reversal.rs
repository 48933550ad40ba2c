use ionflux::matching::SweepParameter;
use ionflux::zero_current::{reversal_potential_zeroth, zero_current_fluxes, ZeroCurrentMode};
use serde::Serialize;

use super::sweep::iv_panel;
use super::{flux_table, parallel_sweep, record_sweep, Context};
use crate::error::CliResult;
use crate::svg::Figure;

#[derive(Serialize)]
struct ReversalOutput {
    /// Root of `I0(V)` from fixed-potential solves.
    v_rev_zeroth: f64,
    /// Zero-current orbit: `V = V0 + V1 d` carries no current to first order.
    v0: f64,
    v1: f64,
    v_at_d: f64,
    j10: f64,
    j20: f64,
    j11: f64,
    j21: f64,
}

pub(super) fn run(ctx: &mut Context) -> CliResult<()> {
    let grid = ctx.cfg.voltage_grid()?;
    let v_rev = ctx.solving(|c| reversal_potential_zeroth(&c.model, &c.cfg.solver))?;
    let zc = ctx.solving(|c| zero_current_fluxes(&c.model, ZeroCurrentMode::Reversal, &c.cfg.solver))?;
    ctx.convergence.record(0, 0, 0.0);
    let d = ctx.model.ions.d;
    let out = ReversalOutput {
        v_rev_zeroth: v_rev,
        v0: zc.v,
        v1: zc.v1,
        v_at_d: zc.v + zc.v1 * d,
        j10: zc.j10,
        j20: zc.j20,
        j11: zc.j11_orbit,
        j21: zc.j21_orbit,
    };
    ctx.notes(&[("V_rev", v_rev), ("V0", out.v0), ("V1", out.v1), ("V_rev(d)", out.v_at_d), ("J10", out.j10), ("J11", out.j11)]);
    ctx.json("reversal.json", &out)?;

    let points = ctx.solving(|c| parallel_sweep(&c.model, SweepParameter::V, &grid, &c.cfg.solver))?;
    ctx.partial |= record_sweep(&mut ctx.convergence, &points);
    let (table, rows) = flux_table("V", &points, &ctx.model.ions);
    ctx.csv("iv.csv", &table)?;

    if rows.is_empty() {
        ctx.warn("empty sweep: no plot files written".into());
        return Ok(());
    }
    let (lo, hi) = (grid.iter().cloned().fold(f64::INFINITY, f64::min), grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    let mut panel = iv_panel(&rows, d);
    if (lo..=hi).contains(&v_rev) {
        panel = panel.marker(v_rev, 0.0, &format!("V_rev = {v_rev:.6}"), "zero-crossing");
    } else {
        ctx.warn(format!("reversal potential {v_rev} lies outside the swept range [{lo}, {hi}]"));
    }
    ctx.svg("iv.svg", &Figure::single(panel))
}
