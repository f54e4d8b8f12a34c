use serde_json::json;

use satburgers_core::exact_solutions::{fit_similarity, SimilarityOptions};
use satburgers_core::initial_data::InitialDatum;
use satburgers_core::solver::solve;

use super::{grid_json, model_json, num, plots_dir, write_meta, Options};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{ensure_dir, fmt_f64, write_csv, write_json};
use crate::plot::{Plot, Series};

/// Step datum `height` for x < 0, zero for x > 0.
pub fn run(cfg: &RunConfig, opts: &Options) -> CliResult<()> {
    let model = cfg.model()?;
    let beta = model
        .dissipation
        .tail_exponent_beta()
        .ok_or_else(|| CliError::Config("selfsim needs a dissipation flux with a power tail (model.beta)".into()))?;
    let grid = cfg.grid()?;
    let solver = cfg.solver(grid.dx())?;
    let height = cfg.f64_or("selfsim.height", Some(1.0))?;
    let mut fit_opts = SimilarityOptions::new(height, beta);
    fit_opts.z_hi = cfg.f64_or("selfsim.z_hi", Some(fit_opts.z_hi))?;
    let u0 = InitialDatum::step(height).sample(grid)?;

    let traj = solve(&u0, &model, &solver)?;
    let fit = fit_similarity(&traj.snapshots, &fit_opts)?;

    let out = &opts.out;
    ensure_dir(out)?;
    let report = json!({
        "beta": beta,
        "alpha_est": fit.alpha_est,
        "alpha_theory": num(fit.alpha_theory),
        "h0_est": fit.h0_est,
        "a_coef": fit.a_coef,
        "t_star_est": fit.t_star_est,
        "disappearance_time": fit.disappearance_time,
        "disappearance_over_t_star": fit.disappearance_time.map(|t| t / fit.t_star_est),
        "collapse_error": fit.collapse_error,
        "fitted_snapshots": fit.collapsed.len(),
    });
    write_json(&out.join("report.json"), &report)?;
    write_csv(
        &out.join("jump.csv"),
        &["t", "jump", "present"],
        fit.jump_series.iter().map(|&(t, j)| {
            let present = fit.disappearance_time.is_none_or(|d| t < d);
            vec![fmt_f64(t), fmt_f64(j), u8::from(present).to_string()]
        }),
    )?;
    write_csv(
        &out.join("collapse.csv"),
        &["t", "z", "h"],
        fit.collapsed.iter().flat_map(|(t, prof)| {
            prof.iter()
                .map(move |(z, h)| vec![fmt_f64(*t), fmt_f64(*z), fmt_f64(*h)])
        }),
    )?;
    write_meta(
        out,
        "selfsim",
        cfg,
        json!({ "model": model_json(&model), "grid": grid_json(&grid), "report": report }),
    )?;

    if opts.svg {
        let plots = plots_dir(out)?;
        let mut p = Plot::new("rescaled profiles u/sqrt(t) against x/sqrt(t)", "z", "h");
        let stride = (fit.collapsed.len() / 6).max(1);
        for (t, prof) in fit.collapsed.iter().step_by(stride) {
            let pts = prof
                .iter()
                .copied()
                .filter(|&(z, _)| z <= 4.0 * fit_opts.z_hi.max(0.5))
                .collect();
            p = p.with(Series::new(format!("t = {}", fmt_f64(*t)), pts));
        }
        p.save(&plots.join("collapse.svg"))?;
        Plot::new("jump at x = 0", "t", "u(0-) - u(0+)")
            .with(Series::new("jump", fit.jump_series.clone()))
            .save(&plots.join("jump.svg"))?;
    }
    Ok(())
}
