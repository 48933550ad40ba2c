use ionflux::bvp::{solve_bvp_continued, BvpStats, Profile};
use ionflux::matching::{solve_matching, SolveStats};
use ionflux::{FluxExpansion, ModelSpec};
use serde::Serialize;

use super::Context;
use crate::error::CliResult;
use crate::output::{fmt17, CsvTable};
use crate::svg::{Figure, Panel, Series};

#[derive(Serialize)]
struct SolveOutput<'a> {
    model: &'a ModelSpec,
    fluxes: FluxExpansion,
    i0: f64,
    i1: f64,
    t0: f64,
    t1: f64,
    /// `J_k0 + J_k1 d` at the model `d`.
    j1: f64,
    j2: f64,
    y_star: f64,
    stats: SolveStats,
    direct: Option<DirectOutput>,
}

#[derive(Serialize)]
struct DirectOutput {
    epsilon: f64,
    j1: f64,
    j2: f64,
    nodes: usize,
    stats: BvpStats,
}

pub(super) fn run(ctx: &mut Context) -> CliResult<()> {
    let sol = ctx.solving(|c| solve_matching(&c.model, &c.cfg.solver))?;
    let s = sol.stats;
    ctx.convergence.record(s.newton_iterations, s.continuation_steps, s.zeroth_residual.max(s.first_residual));
    let orbit = sol.profile(ctx.cfg.solve.samples_per_region)?;

    let direct = if ctx.cfg.solve.direct {
        let p = ctx.solving(|c| solve_bvp_continued(&c.model, &c.cfg.bvp))?;
        ctx.convergence.record(p.stats.newton_iterations, p.stats.continuation_steps, p.stats.residual);
        Some(p)
    } else {
        None
    };

    let ions = ctx.model.ions;
    let f = sol.fluxes;
    let d = ions.d;
    let (j1, j2) = f.at(d);
    ctx.notes(&[
        ("J10", f.j10),
        ("J20", f.j20),
        ("J11", f.j11),
        ("J21", f.j21),
        ("I0", f.i0(&ions)),
        ("I1", f.i1(&ions)),
        ("J1", j1),
        ("J2", j2),
    ]);
    if let Some(p) = &direct {
        ctx.notes(&[("J1_direct", p.j1), ("J2_direct", p.j2)]);
    }

    let model = ctx.model.clone();
    let output = SolveOutput {
        model: &model,
        fluxes: f,
        i0: f.i0(&ions),
        i1: f.i1(&ions),
        t0: f.t0(),
        t1: f.t1(),
        j1,
        j2,
        y_star: sol.y_star,
        stats: s,
        direct: direct.as_ref().map(|p| DirectOutput { epsilon: p.epsilon, j1: p.j1, j2: p.j2, nodes: p.x.len(), stats: p.stats }),
    };
    ctx.json("solve.json", &output)?;

    let mut table = CsvTable::new(&["x", "region", "phi0", "phi1", "c10", "c11", "c20", "c21"]);
    for s in &orbit.samples {
        table.push(vec![
            fmt17(s.x),
            s.region.tag().into(),
            fmt17(s.phi0),
            fmt17(s.phi1),
            fmt17(s.c10),
            fmt17(s.c11),
            fmt17(s.c20),
            fmt17(s.c21),
        ]);
    }
    ctx.csv("profile.csv", &table)?;
    if let Some(p) = &direct {
        let mut table = CsvTable::new(&["x", "phi", "c1", "c2", "u"]);
        for i in 0..p.x.len() {
            table.push_numbers(&[p.x[i], p.phi[i], p.c1[i], p.c2[i], p.u[i]]);
        }
        ctx.csv("direct_profile.csv", &table)?;
    }

    let at = |g: fn(&ionflux::matching::OrbitSample) -> (f64, f64)| -> Vec<(f64, f64)> {
        orbit.samples.iter().map(|s| (s.x, g(s).0 + d * g(s).1)).collect()
    };
    let mut series = vec![
        Series::new("phi (orbit)", at(|s| (s.phi0, s.phi1))),
        Series::new("c1 (orbit)", at(|s| (s.c10, s.c11))),
        Series::new("c2 (orbit)", at(|s| (s.c20, s.c21))),
    ];
    if let Some(p) = &direct {
        series.extend(direct_series(p));
    }
    let geom = &ctx.model.geometry;
    let panel = |title: &str, lo: f64, hi: f64| {
        let mut p = Panel::new(title, "x", "value").x_range(lo, hi).guide(geom.a(), "a", "junction").guide(geom.b(), "b", "junction");
        p.series = series.clone();
        p
    };
    let half = (10.0 * ctx.model.epsilon).max(0.01);
    let zoom = |x: f64| ((x - half).max(0.0), (x + half).min(1.0));
    let (a0, a1) = zoom(geom.a());
    let (b0, b1) = zoom(geom.b());
    let figure = Figure::with_insets(
        panel("Potential and concentrations", 0.0, 1.0),
        vec![panel("Layer at a", a0, a1), panel("Layer at b", b0, b1)],
    );
    ctx.svg("profile.svg", &figure)
}

fn direct_series(p: &Profile) -> Vec<Series> {
    let pts = |v: &[f64]| p.x.iter().zip(v).map(|(x, y)| (*x, *y)).collect();
    vec![
        Series::new("phi (direct)", pts(&p.phi)).dashed(),
        Series::new("c1 (direct)", pts(&p.c1)).dashed(),
        Series::new("c2 (direct)", pts(&p.c2)).dashed(),
    ]
}
