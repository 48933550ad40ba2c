use ionflux::zero_current::{zero_current_coefficients, zero_current_fluxes, ElectroneutralShorthand};

use super::Context;
use crate::error::CliResult;
use crate::output::CsvTable;
use crate::svg::{Figure, Panel, Series};

pub(super) fn run(ctx: &mut Context) -> CliResult<()> {
    let grid = ctx.cfg.voltage_grid()?;
    let mode = ctx.cfg.zero_current.mode;
    let r = ctx.solving(|c| zero_current_fluxes(&c.model, mode, &c.cfg.solver))?;
    ctx.convergence.record(0, 0, 0.0);
    ctx.notes(&[
        ("V", r.v),
        ("V1", r.v1),
        ("J10", r.j10),
        ("J20", r.j20),
        ("J11", r.j11),
        ("J11_orbit", r.j11_orbit),
        ("I0", r.i0),
        ("I1", r.i1),
    ]);
    for (i, v) in r.v_critical.iter().enumerate() {
        ctx.note(&format!("V_critical[{i}]"), *v);
    }
    ctx.json("zero_current.json", &r)?;

    let sh = ElectroneutralShorthand::new(&ctx.model)?;
    let (ions, q) = (ctx.model.ions, ctx.model.q2());
    let mut table = CsvTable::new(&["V", "phi_V", "M00", "M01", "J11", "J11_uncharged"]);
    let mut rows = Vec::with_capacity(grid.len());
    for &v in &grid {
        let c = zero_current_coefficients(&sh, v, &ions);
        let row = [v, c.phi_v, c.m00, c.m01, (c.m00 + c.m01 * q) / sh.h_a, c.m00 / sh.h_a];
        table.push_numbers(&row);
        rows.push(row);
    }
    ctx.csv("zero_current_curve.csv", &table)?;

    if rows.is_empty() {
        ctx.warn("empty sweep: no plot files written".into());
        return Ok(());
    }
    let mut panel = Panel::new("Zero-current first-order flux", "V", "J11 = J21")
        .series(Series::new(&format!("Q = {q}"), rows.iter().map(|r| (r[0], r[4])).collect()))
        .series(Series::new("Q = 0", rows.iter().map(|r| (r[0], r[5])).collect()).dashed());
    let (lo, hi) = (rows[0][0].min(rows[rows.len() - 1][0]), rows[0][0].max(rows[rows.len() - 1][0]));
    for &vc in r.v_critical.iter().filter(|v| (lo..=hi).contains(*v)) {
        let c = zero_current_coefficients(&sh, vc, &ions);
        panel = panel.marker(vc, c.m00 / sh.h_a, &format!("V^c = {vc:.4}"), "critical-voltage");
    }
    if (lo..=hi).contains(&r.v) {
        panel = panel.marker(r.v, r.j11, "operating point", "operating-point");
    }
    ctx.svg("zero_current.svg", &Figure::single(panel))
}
