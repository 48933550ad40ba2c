use ionflux::bvp::{asymptotic_comparison, ComparisonTable};
use serde::Serialize;

use super::Context;
use crate::config::ValidateBlock;
use crate::error::CliResult;
use crate::output::CsvTable;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictForD {
    pub d: f64,
    /// Largest relative error of either species at the smallest `ε`.
    pub max_rel_error: f64,
    pub within_tolerance: bool,
    pub non_increasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationVerdict {
    pub pass: bool,
    pub rel_tol: f64,
    pub per_d: Vec<VerdictForD>,
    /// Error slope in `d` at the smallest `ε`, when at least two `d > 0` were run.
    pub d_slope: Option<[f64; 2]>,
    pub d_order_ok: Option<bool>,
}

impl ValidationVerdict {
    pub fn judge(table: &ComparisonTable, block: &ValidateBlock) -> Self {
        let mut ds: Vec<f64> = block.d.clone();
        ds.dedup();
        let per_d: Vec<VerdictForD> = ds
            .iter()
            .map(|&d| {
                let rows = table.rows_for_d(d);
                let max_rel_error = rows.last().map_or(f64::NAN, |r| r.rel_error[0].max(r.rel_error[1]));
                VerdictForD {
                    d,
                    max_rel_error,
                    within_tolerance: max_rel_error < block.rel_tol,
                    non_increasing: table.non_increasing_in_epsilon(d),
                }
            })
            .collect();
        let d_order_ok = table.d_slope.map(|s| s.iter().all(|v| *v >= block.min_d_order));
        let pass = per_d.iter().all(|v| v.within_tolerance && v.non_increasing) && d_order_ok.unwrap_or(true);
        Self { pass, rel_tol: block.rel_tol, per_d, d_slope: table.d_slope, d_order_ok }
    }
}

#[derive(Serialize)]
struct ValidateOutput<'a> {
    table: &'a ComparisonTable,
    verdict: &'a ValidationVerdict,
}

pub(super) fn run(ctx: &mut Context) -> CliResult<()> {
    let block = ctx.cfg.validate.clone();
    let table = ctx.solving(|c| asymptotic_comparison(&c.model, &block.epsilons, &block.d, &c.cfg.bvp, &c.cfg.solver))?;
    for _ in &table.rows {
        ctx.convergence.record(0, 0, 0.0);
    }
    let verdict = ValidationVerdict::judge(&table, &block);

    let mut csv = CsvTable::new(&[
        "epsilon",
        "d",
        "J1",
        "J2",
        "J1_asymptotic",
        "J2_asymptotic",
        "abs_error_1",
        "abs_error_2",
        "rel_error_1",
        "rel_error_2",
    ]);
    for r in &table.rows {
        csv.push_numbers(&[
            r.epsilon,
            r.d,
            r.j1,
            r.j2,
            r.j1_asymptotic,
            r.j2_asymptotic,
            r.abs_error[0],
            r.abs_error[1],
            r.rel_error[0],
            r.rel_error[1],
        ]);
    }
    ctx.csv("comparison.csv", &csv)?;
    ctx.json("comparison.json", &ValidateOutput { table: &table, verdict: &verdict })?;

    ctx.note("pass", if verdict.pass { 1.0 } else { 0.0 });
    for v in &verdict.per_d {
        ctx.note(&format!("max_rel_error(d={})", v.d), v.max_rel_error);
        if !(v.within_tolerance && v.non_increasing) {
            ctx.warn(format!(
                "d = {}: relative error {:.3e} (tolerance {}), non-increasing in epsilon: {}",
                v.d, v.max_rel_error, block.rel_tol, v.non_increasing
            ));
        }
    }
    if verdict.d_order_ok == Some(false) {
        ctx.warn(format!("error slope in d {:?} below {}", verdict.d_slope, block.min_d_order));
    }
    Ok(())
}
