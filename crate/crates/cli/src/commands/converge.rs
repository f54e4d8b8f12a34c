use rayon::prelude::*;
use serde_json::{json, Value};

use satburgers_core::solver::{l1_distance, solve, SolverConfig};
use satburgers_core::{Grid, GridField, WaveProfile};

use super::{downward_crossing, model_json, num, plots_dir, write_meta, Options};
use crate::config::{DatumSource, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io::{ensure_dir, fmt_f64, snapshot_name, write_csv, write_field, write_json};
use crate::plot::{Plot, Series};

/// One member of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub dx: f64,
    pub epsilon: f64,
    pub l1_error: f64,
    /// log(e_prev / e) / log(h_prev / h) against the previous row; NaN on the first.
    pub observed_order: f64,
    /// Distance of the mid-level crossing from its exact position (wave oracle only).
    pub front_drift: Option<f64>,
}

/// What the errors are measured against.
pub enum Oracle {
    Wave(Box<WaveProfile>),
    /// No exact solution: each sweep is compared with its own last (finest
    /// or least viscous) member, which is left out of the table.
    SelfConsistency,
}

/// Outcome of `study`: the dx sweep, the epsilon sweep (on the base grid),
/// the final state of every member in run order, and the oracle.
pub struct Study {
    pub resolution_rows: Vec<StudyRow>,
    pub epsilon_rows: Vec<StudyRow>,
    pub finals: Vec<GridField>,
    pub oracle: Oracle,
}

struct Member {
    grid: Grid,
    solver: SolverConfig,
}

/// Trapezoidal `int |a - b|` over the nodes of `a`, with `b` interpolated.
fn l1_against(a: &GridField, b: &GridField) -> f64 {
    let d: Vec<f64> = a
        .grid
        .nodes()
        .iter()
        .zip(&a.u)
        .map(|(&x, &u)| (u - b.sample(x)).abs())
        .collect();
    let n = d.len();
    (d.iter().sum::<f64>() - 0.5 * (d[0] + d[n - 1])) * a.dx()
}

fn orders(rows: &mut [StudyRow], key: fn(&StudyRow) -> f64) {
    for k in 0..rows.len() {
        rows[k].observed_order = if k == 0 {
            f64::NAN
        } else {
            (rows[k - 1].l1_error / rows[k].l1_error).ln() / (key(&rows[k - 1]) / key(&rows[k])).ln()
        };
    }
}

fn rows_for(members: &[Member], finals: &[GridField], oracle: &Oracle) -> CliResult<Vec<StudyRow>> {
    let row = |m: &Member, l1_error: f64, front_drift: Option<f64>| StudyRow {
        dx: m.grid.dx(),
        epsilon: m.solver.epsilon,
        l1_error,
        observed_order: f64::NAN,
        front_drift,
    };
    match oracle {
        Oracle::Wave(p) => members
            .iter()
            .zip(finals)
            .map(|(m, fin)| {
                let exact = p.field(m.grid, fin.t, 0.0)?;
                let mid = 0.5 * (p.b_minus + p.b_plus);
                let drift = downward_crossing(fin, mid).map(|x| (x - p.speed * fin.t).abs());
                Ok(row(m, l1_distance(fin, &exact)?, drift))
            })
            .collect(),
        Oracle::SelfConsistency => {
            let Some(reference) = finals.last() else {
                return Ok(vec![]);
            };
            Ok(members[..members.len() - 1]
                .iter()
                .zip(finals)
                .map(|(m, fin)| row(m, l1_against(fin, reference), None))
                .collect())
        }
    }
}

/// Resolution and viscosity sweeps, against the traveling-wave oracle when
/// the datum is a wave and in self-consistency mode otherwise.
pub fn study(cfg: &RunConfig) -> CliResult<Study> {
    let model = cfg.model()?;
    let oracle = match cfg.datum(&model)? {
        DatumSource::Wave { profile, .. } => Oracle::Wave(profile),
        DatumSource::Function(_) => Oracle::SelfConsistency,
    };
    let mut resolutions = cfg.list("study.resolutions")?;
    let mut eps_list = cfg.list("study.eps_list")?;
    if resolutions.is_empty() && eps_list.is_empty() {
        return Err(CliError::Config(
            "converge needs study.resolutions and/or study.eps_list".into(),
        ));
    }
    if let Some(e) = eps_list.iter().find(|e| !(**e >= 0.0)) {
        return Err(CliError::Config(format!(
            "study.eps_list entries must be >= 0, got {e}"
        )));
    }
    let minimum = if matches!(oracle, Oracle::SelfConsistency) {
        2
    } else {
        1
    };
    for (key, n) in [
        ("study.resolutions", resolutions.len()),
        ("study.eps_list", eps_list.len()),
    ] {
        if n > 0 && n < minimum {
            return Err(CliError::Config(format!(
                "{key} needs at least two entries without a wave oracle"
            )));
        }
    }
    resolutions.sort_by(|a, b| b.total_cmp(a));
    eps_list.sort_by(|a, b| b.total_cmp(a));
    let mut members = Vec::new();
    for &dx in &resolutions {
        let grid = cfg.grid_with_spacing(dx)?;
        let mut solver = cfg.solver(grid.dx())?;
        solver.snapshot_times.clear();
        members.push(Member { grid, solver });
    }
    if !eps_list.is_empty() {
        let grid = cfg.grid()?;
        for &eps in &eps_list {
            let mut solver = cfg.solver(grid.dx())?;
            solver.epsilon = eps;
            solver.snapshot_times.clear();
            members.push(Member { grid, solver });
        }
    }
    // members are independent; outputs are gathered in run order
    let finals: Vec<GridField> = members
        .par_iter()
        .map(|m| -> CliResult<GridField> {
            let u0 = cfg.initial_field(&model, m.grid)?;
            Ok(solve(&u0, &model, &m.solver)?.final_state().clone())
        })
        .collect::<CliResult<_>>()?;
    let nres = resolutions.len();
    let mut resolution_rows = rows_for(&members[..nres], &finals[..nres], &oracle)?;
    let mut epsilon_rows = rows_for(&members[nres..], &finals[nres..], &oracle)?;
    orders(&mut resolution_rows, |r| r.dx);
    orders(&mut epsilon_rows, |r| r.epsilon);
    Ok(Study {
        resolution_rows,
        epsilon_rows,
        finals,
        oracle,
    })
}

fn rows_json(rows: &[StudyRow]) -> Value {
    rows.iter()
        .map(|r| {
            json!({
                "dx": r.dx,
                "epsilon": r.epsilon,
                "l1_error": r.l1_error,
                "observed_order": num(r.observed_order),
                "front_drift": r.front_drift,
            })
        })
        .collect()
}

pub fn run(cfg: &RunConfig, opts: &Options) -> CliResult<()> {
    let model = cfg.model()?;
    let Study {
        resolution_rows: res_rows,
        epsilon_rows: eps_rows,
        finals,
        oracle,
    } = study(cfg)?;
    let out = &opts.out;
    ensure_dir(out)?;
    let table = |rows: &[StudyRow]| -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| {
                vec![
                    fmt_f64(r.dx),
                    fmt_f64(r.epsilon),
                    fmt_f64(r.l1_error),
                    fmt_f64(r.observed_order),
                ]
            })
            .collect()
    };
    let header = ["dx", "epsilon", "l1_error", "observed_order"];
    write_csv(&out.join("study.csv"), &header, table(&res_rows))?;
    if !eps_rows.is_empty() {
        write_csv(&out.join("study_eps.csv"), &header, table(&eps_rows))?;
    }
    for (k, f) in finals.iter().enumerate() {
        let dir = out.join(format!("member_{k}"));
        ensure_dir(&dir)?;
        write_field(&dir.join(snapshot_name(f.t)), f)?;
    }
    let oracle = match &oracle {
        Oracle::Wave(p) => json!({
            "kind": "traveling_wave",
            "b_minus": p.b_minus,
            "b_plus": p.b_plus,
            "speed": p.speed,
            "class": format!("{:?}", p.class),
        }),
        Oracle::SelfConsistency => json!({ "kind": "finest_member" }),
    };
    let report = json!({
        "oracle": oracle,
        "resolution_rows": rows_json(&res_rows),
        "epsilon_rows": rows_json(&eps_rows),
    });
    write_json(&out.join("report.json"), &report)?;
    write_meta(
        out,
        "converge",
        cfg,
        json!({ "model": model_json(&model), "study": report }),
    )?;

    if opts.svg && (res_rows.len() > 1 || eps_rows.len() > 1) {
        let plots = plots_dir(out)?;
        let mut plot = Plot::new("L1 error at t_end against the oracle", "dx or epsilon", "L1 error").log_log();
        if !res_rows.is_empty() {
            plot = plot.with(Series::new(
                "dx sweep",
                res_rows.iter().map(|r| (r.dx, r.l1_error)).collect(),
            ));
        }
        if !eps_rows.is_empty() {
            plot = plot.with(Series::new(
                "epsilon sweep",
                eps_rows.iter().map(|r| (r.epsilon, r.l1_error)).collect(),
            ));
        }
        plot.save(&plots.join("convergence.svg"))?;
    }
    Ok(())
}
