use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use satburgers_core::{Grid, ModelSpec};

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::io::{ensure_dir, write_json};

pub mod converge;
pub mod selfsim;
pub mod solve;
pub mod verify;
pub mod wave;

/// Options shared by all subcommands.
#[derive(Debug, Clone)]
pub struct Options {
    pub config: PathBuf,
    pub out: PathBuf,
    pub svg: bool,
    /// Run directory to check (verify only); defaults to `out`.
    pub run: Option<PathBuf>,
}

pub(crate) fn model_json(m: &ModelSpec) -> Value {
    let q = &m.dissipation;
    json!({
        "name": m.name,
        "flux": m.flux.name(),
        "dissipation": q.name(),
        "q_minus_inf": q.q_minus_inf(),
        "q_plus_inf": q.q_plus_inf(),
        "beta": q.tail_exponent_beta(),
    })
}

pub(crate) fn grid_json(g: &Grid) -> Value {
    json!({ "x_left": g.x_left(), "x_right": g.x_right(), "n": g.n(), "dx": g.dx() })
}

/// Writes `meta.json`; the `config` object replays the run.
pub(crate) fn write_meta(out: &Path, command: &str, cfg: &RunConfig, extra: Value) -> CliResult<()> {
    ensure_dir(out)?;
    let mut entries = serde_json::Map::new();
    for (k, v) in cfg.entries() {
        let v = if k == "datum.csv" {
            cfg.resolved_path(v).display().to_string()
        } else {
            v.clone()
        };
        entries.insert(k.clone(), Value::String(v));
    }
    let mut meta = json!({
        "tool": "satburgers",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": entries,
    });
    if let (Some(m), Value::Object(e)) = (meta.as_object_mut(), extra) {
        m.extend(e);
    }
    write_json(&out.join("meta.json"), &meta)
}

pub(crate) fn plots_dir(out: &Path) -> CliResult<PathBuf> {
    let p = out.join("plots");
    ensure_dir(&p)?;
    Ok(p)
}

/// Where u crosses `level` going down, by linear interpolation.
pub(crate) fn downward_crossing(f: &satburgers_core::GridField, level: f64) -> Option<f64> {
    f.u.windows(2).enumerate().find_map(|(i, w)| {
        let (a, b) = (w[0] - level, w[1] - level);
        (a >= 0.0 && b < 0.0).then(|| f.grid.x(i) + f.dx() * a / (a - b))
    })
}

/// `null` for non-finite numbers so the JSON stays valid.
pub(crate) fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}
