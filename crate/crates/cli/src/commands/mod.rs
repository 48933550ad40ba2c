mod reversal;
mod solve;
mod sweep;
mod validate;
mod zero_current;

use std::time::{Duration, Instant};

use ionflux::matching::{continuation_sweep, SweepParameter, SweepPoint};
use ionflux::{FluxExpansion, IonPair, ModelSpec};
use rayon::prelude::*;

use crate::config::{Command, ExperimentConfig, Format};
use crate::error::CliResult;
use crate::output::{CsvTable, OutputWriter};
use crate::report::{Convergence, PointFailure, SummaryItem};
use crate::svg::Figure;

pub use sweep::SWEEP_CHUNK;
pub use validate::{ValidationVerdict, VerdictForD};

pub(crate) struct Context {
    pub cfg: ExperimentConfig,
    pub model: ModelSpec,
    pub out: OutputWriter,
    pub convergence: Convergence,
    pub warnings: Vec<String>,
    pub summary: Vec<SummaryItem>,
    pub partial: bool,
    pub solve_time: Duration,
    pub write_time: Duration,
}

impl Context {
    pub fn new(cfg: ExperimentConfig, out: OutputWriter) -> Self {
        let model = cfg.model();
        Self {
            cfg,
            model,
            out,
            convergence: Convergence::default(),
            warnings: Vec::new(),
            summary: Vec::new(),
            partial: false,
            solve_time: Duration::ZERO,
            write_time: Duration::ZERO,
        }
    }

    pub fn solving<T>(&mut self, f: impl FnOnce(&Self) -> T) -> T {
        let t = Instant::now();
        let r = f(self);
        self.solve_time += t.elapsed();
        r
    }

    pub fn csv(&mut self, name: &str, table: &CsvTable) -> CliResult<()> {
        let t = Instant::now();
        self.out.write_csv(name, table)?;
        self.write_time += t.elapsed();
        Ok(())
    }

    pub fn json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let t = Instant::now();
        self.out.write_json(name, value)?;
        self.write_time += t.elapsed();
        Ok(())
    }

    pub fn svg(&mut self, name: &str, figure: &Figure) -> CliResult<()> {
        if !self.out.enabled(Format::Svg) {
            return Ok(());
        }
        let t = Instant::now();
        self.out.write(name, Format::Svg, figure.render().as_bytes())?;
        self.write_time += t.elapsed();
        Ok(())
    }

    pub fn note(&mut self, name: &str, value: f64) {
        self.summary.push(SummaryItem { name: name.into(), value });
    }

    pub fn notes(&mut self, items: &[(&str, f64)]) {
        for (k, v) in items {
            self.note(k, *v);
        }
    }

    pub fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }
}

pub(crate) fn execute(command: Command, ctx: &mut Context) -> CliResult<()> {
    match command {
        Command::Solve => solve::run(ctx),
        Command::Sweep => sweep::run(ctx),
        Command::ZeroCurrent => zero_current::run(ctx),
        Command::Reversal => reversal::run(ctx),
        Command::Validate => validate::run(ctx),
    }
}

/// Contiguous chunks of the grid are solved in parallel, each by continuation from its first
/// point. Chunk boundaries depend only on the grid, so results do not depend on the thread count.
pub(crate) fn parallel_sweep(
    model: &ModelSpec,
    parameter: SweepParameter,
    grid: &[f64],
    opts: &ionflux::matching::SolverOptions,
) -> CliResult<Vec<SweepPoint>> {
    let chunks: Vec<ionflux::Result<Vec<SweepPoint>>> =
        grid.par_chunks(SWEEP_CHUNK).map(|c| continuation_sweep(model, parameter, c, opts)).collect();
    let mut points = Vec::with_capacity(grid.len());
    for c in chunks {
        points.extend(c?);
    }
    Ok(points)
}

pub(crate) fn record_sweep(conv: &mut Convergence, points: &[SweepPoint]) -> bool {
    let mut failed = false;
    for p in points {
        match &p.result {
            Ok(_) => {
                conv.points += 1;
                conv.converged += 1;
            }
            Err(e) => {
                conv.points += 1;
                conv.failures.push(PointFailure { value: p.value, error: e.to_string() });
                failed = true;
            }
        }
    }
    failed
}

pub(crate) const FLUX_COLUMNS: [&str; 6] = ["J10", "J20", "J11", "J21", "I0", "I1"];

/// `(value, J10, J20, J11, J21, I0, I1)`; failed points are written as NaN.
pub(crate) fn flux_row(value: f64, f: Option<&FluxExpansion>, ions: &IonPair) -> [f64; 7] {
    match f {
        Some(f) => [value, f.j10, f.j20, f.j11, f.j21, f.i0(ions), f.i1(ions)],
        None => {
            let mut row = [f64::NAN; 7];
            row[0] = value;
            row
        }
    }
}

pub(crate) fn flux_table(column: &str, points: &[SweepPoint], ions: &IonPair) -> (CsvTable, Vec<[f64; 7]>) {
    let mut header = vec![column];
    header.extend(FLUX_COLUMNS);
    let mut table = CsvTable::new(&header);
    let rows: Vec<[f64; 7]> = points.iter().map(|p| flux_row(p.value, p.result.as_ref().ok(), ions)).collect();
    for r in &rows {
        table.push_numbers(r);
    }
    (table, rows)
}
