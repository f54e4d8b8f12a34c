use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use satburgers_core::limit_analysis::{
    condition_e_check, continuity_modulus, detect_shocks, far_field_variation, initial_trace_check, q_lim_profile,
    shock_flux_deviation, track_and_check_hugoniot, weak_residual, QLimProfile, TestBank,
};
use satburgers_core::{Grid, GridField};

use super::{num, plots_dir, Options};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{ensure_dir, read_field, read_json, write_json};
use crate::plot::{Plot, Series};

/// Keys `--config` may add on top of a run directory's own configuration.
const OVERLAY_PREFIX: &str = "verify.";

fn malformed(dir: &Path, what: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("malformed run directory {}: {what}", dir.display()))
}

/// Reads the snapshots listed in `meta.json`, ordered by time.
pub fn load_snapshots(dir: &Path) -> CliResult<Vec<GridField>> {
    let meta = read_json(&dir.join("meta.json")).map_err(|e| malformed(dir, e))?;
    let list = meta
        .get("snapshots")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed(dir, "meta.json has no snapshot list"))?;
    let mut out = Vec::with_capacity(list.len());
    let mut grid: Option<Grid> = None;
    for entry in list {
        let file = entry
            .get("file")
            .and_then(Value::as_str)
            .ok_or_else(|| malformed(dir, "snapshot entry without a file name"))?;
        let (xs, us, t) = read_field(&dir.join(file)).map_err(|e| malformed(dir, e))?;
        if xs.len() < 16 {
            return Err(malformed(dir, format!("{file} has only {} nodes", xs.len())));
        }
        let g = match grid {
            Some(g) => g,
            None => {
                let g = Grid::new(xs[0], xs[xs.len() - 1], xs.len()).map_err(|e| malformed(dir, e))?;
                grid = Some(g);
                g
            }
        };
        let off = xs
            .iter()
            .enumerate()
            .any(|(i, &x)| (x - g.x(i)).abs() > 1e-9 * (1.0 + x.abs()));
        if xs.len() != g.n() || off {
            return Err(malformed(
                dir,
                format!("{file} is not on the grid of the first snapshot"),
            ));
        }
        out.push(GridField::new(g, t, us).map_err(|e| malformed(dir, e))?);
    }
    if out.is_empty() {
        return Err(malformed(dir, "no snapshots"));
    }
    out.sort_by(|a, b| a.t.total_cmp(&b.t));
    if out.windows(2).any(|w| w[1].t <= w[0].t) {
        return Err(malformed(dir, "repeated snapshot times"));
    }
    Ok(out)
}

struct Check {
    name: &'static str,
    value: f64,
    tol: f64,
}

impl Check {
    fn passed(&self) -> bool {
        self.value <= self.tol
    }

    fn json(&self) -> Value {
        json!({ "name": self.name, "value": num(self.value), "tol": self.tol, "passed": self.passed() })
    }
}

/// Runs the admissibility pipeline on `run_dir`, writes `report.json` into
/// `out` and fails with a verification error if any check fails.
pub fn run_dir(run_dir: &Path, overlay: Option<&RunConfig>, out: &Path, svg: bool) -> CliResult<Value> {
    let mut cfg = RunConfig::load(&run_dir.join("meta.json")).map_err(|e| malformed(run_dir, e))?;
    if let Some(o) = overlay {
        for (k, v) in o.entries().iter().filter(|(k, _)| k.starts_with(OVERLAY_PREFIX)) {
            cfg.set(k, v.clone())?;
        }
    }
    let model = cfg.model()?;
    let snaps = load_snapshots(run_dir)?;
    let grid = snaps[0].grid;
    let dx = grid.dx();
    let qopts = cfg.qlim_options(&model)?;
    let slope = cfg.f64_or("verify.slope_factor", Some(0.02))? / dx;
    let hug_tol = cfg.f64_or("verify.hugoniot_tol", Some(0.05))?;
    let qlim_tol = cfg.f64_or("verify.qlim_tol", Some(2e-2))?;
    let modulus_tol = cfg.f64_or("verify.modulus_tol", Some(5e-2))?;
    let weak_tol = cfg.opt_f64("verify.weak_tol")?;
    if !(slope > 0.0) {
        return Err(CliError::Config("verify.slope_factor must be positive".into()));
    }

    let qlim: Vec<QLimProfile> = snaps
        .par_iter()
        .map(|s| q_lim_profile(s, &model, &qopts))
        .collect::<Result<_, _>>()?;
    let later: Vec<usize> = (0..snaps.len()).filter(|&k| snaps[k].t > 0.0).collect();
    if later.is_empty() {
        return Err(malformed(run_dir, "no snapshot with t > 0"));
    }

    // Q_lim continuity: only after t = 0, where the datum may itself jump
    let moduli: Vec<Value> = later
        .iter()
        .map(|&k| {
            let (at, jump) = qlim[k].worst_jump();
            json!({ "t": snaps[k].t, "modulus": jump, "at": at, "variation": qlim[k].variation() })
        })
        .collect();
    let modulus = later.iter().map(|&k| continuity_modulus(&qlim[k])).fold(0.0, f64::max);

    let last = snaps.len() - 1;
    let final_shocks = detect_shocks(&snaps[last], slope);
    let mut shocks_json = Vec::new();
    let mut e_json = Vec::new();
    let mut e_all = true;
    let mut qdev_max: f64 = 0.0;
    for &k in &later {
        let shocks = detect_shocks(&snaps[k], slope);
        let dev = shock_flux_deviation(&qlim[k], &shocks, &model);
        for (s, d) in shocks.iter().zip(&dev) {
            let v = condition_e_check(&model.flux, s.u_minus, s.u_plus, 401)?;
            e_all &= v.satisfied;
            qdev_max = qdev_max.max(*d);
            if k == last || !v.satisfied {
                e_json.push(json!({
                    "t": snaps[k].t,
                    "location": s.location,
                    "u_minus": s.u_minus,
                    "u_plus": s.u_plus,
                    "satisfied": v.satisfied,
                    "worst_violation": v.worst_violation,
                    "worst_at": v.worst_at,
                }));
            }
        }
    }
    let tracked_input: Vec<GridField> = later.iter().map(|&k| snaps[k].clone()).collect();
    let records = track_and_check_hugoniot(&tracked_input, &model, slope)?;
    let mut hug_max: f64 = 0.0;
    for r in &records {
        hug_max = hug_max.max(r.hugoniot_residual);
        let s = r.samples.last().expect("tracks have samples");
        shocks_json.push(json!({
            "t_first": r.samples[0].t,
            "t_last": s.t,
            "location": s.location,
            "u_minus": s.u_minus,
            "u_plus": s.u_plus,
            "samples": r.samples.len(),
            "mean_speed": r.mean_speed(),
            "chord_speed": s.chord_speed,
            "hugoniot_residual": r.hugoniot_residual,
            "admissible": r.admissibility.satisfied,
            "truncated": r.truncated,
        }));
    }

    let bank = TestBank::standard(grid.x_left(), grid.x_right(), snaps[0].t, snaps[last].t)?;
    let weak = if snaps.len() >= 2 {
        let w = weak_residual(&snaps, &model, &qlim, &bank)?;
        Some(w)
    } else {
        None
    };
    let u0 = if snaps[0].t == 0.0 {
        snaps[0].clone()
    } else {
        cfg.initial_field(&model, grid)?
    };
    let trace = initial_trace_check(&snaps, &u0)?;
    let (far_l, far_r) = far_field_variation(&snaps[last], 0.05);

    let mut checks = vec![
        Check {
            name: "qlim_modulus",
            value: modulus,
            tol: modulus_tol,
        },
        Check {
            name: "qlim_at_shocks",
            value: qdev_max,
            tol: qlim_tol,
        },
        Check {
            name: "condition_E",
            value: if e_all { 0.0 } else { 1.0 },
            tol: 0.0,
        },
        Check {
            name: "hugoniot",
            value: hug_max,
            tol: hug_tol,
        },
    ];
    if let (Some(tol), Some(w)) = (weak_tol, &weak) {
        checks.push(Check {
            name: "weak_residual",
            value: w.normalized(),
            tol,
        });
    }
    let passed = checks.iter().all(Check::passed);
    let report = json!({
        "run": run_dir.display().to_string(),
        "slope_threshold": slope,
        "qlim_modulus": { "max": modulus, "per_snapshot": moduli },
        "shocks": shocks_json,
        "final_shock_count": final_shocks.len(),
        "condition_E": e_json,
        "weak_residuals": weak.as_ref().map(|w| json!({
            "per_test": w.per_test,
            "magnitude": w.magnitude,
            "max": w.max(),
            "normalized": w.normalized(),
        })),
        "initial_trace": trace.iter().map(|(t, d)| json!({ "t": t, "l1": d })).collect::<Vec<_>>(),
        "far_field_variation": { "left": far_l, "right": far_r },
        "checks": checks.iter().map(Check::json).collect::<Vec<_>>(),
        "passed": passed,
    });
    ensure_dir(out)?;
    write_json(&out.join("report.json"), &report)?;
    if svg {
        let plots = plots_dir(out)?;
        let q = &qlim[last];
        Plot::new(format!("Q_lim at t = {}", snaps[last].t), "x", "Q_lim")
            .with(Series::new(
                "Q_lim",
                q.x_nodes.iter().copied().zip(q.q_values.iter().copied()).collect(),
            ))
            .save(&plots.join("qlim_final.svg"))?;
    }
    if !passed {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
        return Err(CliError::Verification(format!("failed checks: {}", failed.join(", "))));
    }
    Ok(report)
}

pub fn run(overlay: Option<&RunConfig>, opts: &Options) -> CliResult<()> {
    let dir = opts.run.as_deref().unwrap_or(&opts.out);
    run_dir(dir, overlay, &opts.out, opts.svg).map(|_| ())
}
