use ionflux::matching::SweepParameter;

use super::{flux_table, parallel_sweep, record_sweep, Context};
use crate::error::{CliError, CliResult};
use crate::svg::{Figure, Panel, Series};

/// Grid points solved by one worker, by continuation from the first of them.
pub const SWEEP_CHUNK: usize = 8;

pub(super) fn run(ctx: &mut Context) -> CliResult<()> {
    let block = ctx.cfg.sweep.clone().ok_or_else(|| CliError::Config("`sweep` needs a [sweep] section".into()))?;
    let grid = block.grid()?;
    let parameter = block.parameter;
    let points = ctx.solving(|c| parallel_sweep(&c.model, parameter, &grid, &c.cfg.solver))?;
    ctx.partial |= record_sweep(&mut ctx.convergence, &points);

    let ions = ctx.model.ions;
    let (table, rows) = flux_table(parameter.name(), &points, &ions);
    ctx.csv("sweep.csv", &table)?;
    ctx.note("points", rows.len() as f64);
    ctx.note("failed", ctx.convergence.failures.len() as f64);

    if rows.is_empty() {
        ctx.warn("empty sweep: no plot files written".into());
        return Ok(());
    }
    let name = parameter.name();
    let col = |k: usize| rows.iter().map(|r| (r[0], r[k])).collect::<Vec<_>>();
    let fluxes = Panel::new(&format!("Fluxes against {name}"), name, "flux")
        .series(Series::new("J10", col(1)))
        .series(Series::new("J20", col(2)))
        .series(Series::new("J11", col(3)).dashed())
        .series(Series::new("J21", col(4)).dashed());
    ctx.svg("fluxes.svg", &Figure::single(fluxes))?;
    if parameter == SweepParameter::V {
        ctx.svg("iv.svg", &Figure::single(iv_panel(&rows, ions.d)))?;
    }
    Ok(())
}

/// `I0` and `I0 + I1 d` against `V` from flux rows.
pub(super) fn iv_panel(rows: &[[f64; 7]], d: f64) -> Panel {
    Panel::new("Current-voltage relation", "V", "I")
        .series(Series::new("I0", rows.iter().map(|r| (r[0], r[5])).collect()))
        .series(Series::new(&format!("I0 + I1 d (d = {d})"), rows.iter().map(|r| (r[0], r[5] + d * r[6])).collect()).dashed())
}
