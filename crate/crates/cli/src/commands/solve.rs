use serde_json::json;

use satburgers_core::limit_analysis::q_lim_profile;
use satburgers_core::solver::solve;

use super::{grid_json, model_json, plots_dir, write_meta, Options};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::io::{ensure_dir, fmt_f64, snapshot_name, write_diag, write_field};
use crate::plot::{Plot, Series};

pub fn run(cfg: &RunConfig, opts: &Options) -> CliResult<()> {
    let model = cfg.model()?;
    let grid = cfg.grid()?;
    let solver = cfg.solver(grid.dx())?;
    let u0 = cfg.initial_field(&model, grid)?;
    let qopts = cfg.qlim_options(&model)?;
    let out = &opts.out;
    ensure_dir(out)?;

    let traj = solve(&u0, &model, &solver)?;
    let mut snaps = Vec::with_capacity(traj.snapshots.len());
    for s in &traj.snapshots {
        let name = snapshot_name(s.t);
        write_field(&out.join(&name), s)?;
        snaps.push(json!({ "t": s.t, "file": name }));
    }
    write_diag(&out.join("diag.csv"), &traj.diagnostics)?;
    let d = &traj.diagnostics;
    write_meta(
        out,
        "solve",
        cfg,
        json!({
            "model": model_json(&model),
            "grid": grid_json(&grid),
            "epsilon": solver.epsilon,
            "cfl_safety": solver.cfl_safety,
            "boundary": solver.boundary.as_str(),
            "t_end": solver.t_end,
            "steps": d.steps(),
            "snapshots": snaps,
        }),
    )?;

    if opts.svg {
        let plots = plots_dir(out)?;
        for s in &traj.snapshots {
            let tag = fmt_f64(s.t);
            let xs = grid.nodes();
            Plot::new(format!("u at t = {tag}"), "x", "u")
                .with(Series::new("u", xs.iter().copied().zip(s.u.iter().copied()).collect()))
                .save(&plots.join(format!("u_{tag}.svg")))?;
            let q = q_lim_profile(s, &model, &qopts)?;
            Plot::new(format!("Q_lim at t = {tag}"), "x", "Q_lim")
                .with(Series::new("Q_lim", q.x_nodes.into_iter().zip(q.q_values).collect()))
                .save(&plots.join(format!("qlim_{tag}.svg")))?;
        }
        let series = |f: fn(&satburgers_core::solver::DiagRow) -> f64| d.all_rows().map(|r| (r.t, f(r))).collect();
        Plot::new("monitors", "t", "value")
            .with(Series::new("total variation", series(|r| r.tv)))
            .with(Series::new("L1 norm", series(|r| r.l1)))
            .with(Series::new("sup norm", series(|r| r.sup)))
            .save(&plots.join("diagnostics.svg"))?;
    }
    Ok(())
}
