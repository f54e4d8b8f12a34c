//! Run configuration.
//!
//! Grammar: one `section.key = value` per line, `#` starts a comment, blank
//! lines are ignored. Values are kept as text; lists are comma separated.
//! A `meta.json` written by this tool is accepted as well (its `config`
//! object holds the same flat keys), so any run can be replayed from its
//! output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use satburgers_core::initial_data::{mollify, InitialDatum, MollifierKernel};
use satburgers_core::limit_analysis::QLimOptions;
use satburgers_core::model::{builtin_model_by_name, ModelSpec};
use satburgers_core::{Boundary, Grid, GridField, SolverConfig};

use crate::error::{CliError, CliResult};

/// Every key the harness understands.
pub const KNOWN_KEYS: &[&str] = &[
    "model.name",
    "model.q_bar",
    "model.beta",
    "datum.preset",
    "datum.params",
    "datum.csv",
    "datum.jumps",
    "datum.mollify",
    "grid.x_left",
    "grid.x_right",
    "grid.n",
    "grid.dx",
    "solver.epsilon",
    "solver.cfl_safety",
    "solver.t_end",
    "solver.snapshot_times",
    "solver.snapshot_count",
    "solver.boundary",
    "study.eps_list",
    "study.resolutions",
    "wave.b_minus",
    "wave.b_plus",
    "wave.xi_min",
    "wave.xi_max",
    "wave.n",
    "selfsim.height",
    "selfsim.z_hi",
    "verify.slope_factor",
    "verify.hugoniot_tol",
    "verify.qlim_tol",
    "verify.modulus_tol",
    "verify.weak_tol",
    "verify.h_sweep",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
    /// Directory that relative paths (datum.csv) are resolved against.
    base_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected 'section.key = value'", no + 1)))?;
            let key = key.trim();
            if !key.contains('.') || key.split('.').any(str::is_empty) {
                return Err(CliError::Config(format!(
                    "line {}: key '{key}' is not of the form section.key",
                    no + 1
                )));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key '{key}'", no + 1)));
            }
        }
        Self::from_entries(entries)
    }

    pub fn from_entries(entries: BTreeMap<String, String>) -> CliResult<Self> {
        if let Some(k) = entries.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(CliError::Config(format!("unknown key '{k}'")));
        }
        Ok(Self {
            entries,
            base_dir: PathBuf::from("."),
        })
    }

    /// Reads a flat config file or a `meta.json` from an earlier run.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = if text.trim_start().starts_with('{') {
            let v: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: invalid JSON: {e}", path.display())))?;
            let map = v
                .get("config")
                .and_then(|c| c.as_object())
                .ok_or_else(|| CliError::Config(format!("{}: no 'config' object", path.display())))?;
            let mut entries = BTreeMap::new();
            for (k, v) in map {
                let s = v.as_str().ok_or_else(|| {
                    CliError::Config(format!("{}: config value for '{k}' is not a string", path.display()))
                })?;
                entries.insert(k.clone(), s.to_string());
            }
            Self::from_entries(entries)?
        } else {
            Self::parse(&text)?
        };
        cfg.base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(cfg)
    }

    /// `path` relative to the directory the configuration was loaded from.
    pub fn resolved_path(&self, path: &str) -> PathBuf {
        let p = self.base_dir.join(path);
        p.canonicalize().unwrap_or(p)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> CliResult<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Config(format!("unknown key '{key}'")));
        }
        self.entries.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> CliResult<&str> {
        self.get(key)
            .ok_or_else(|| CliError::Config(format!("missing required key '{key}'")))
    }

    pub fn f64_or(&self, key: &str, default: Option<f64>) -> CliResult<f64> {
        match self.get(key) {
            Some(v) => parse_f64(key, v),
            None => default.ok_or_else(|| CliError::Config(format!("missing required key '{key}'"))),
        }
    }

    pub fn opt_f64(&self, key: &str) -> CliResult<Option<f64>> {
        self.get(key).map(|v| parse_f64(key, v)).transpose()
    }

    pub fn usize_or(&self, key: &str, default: Option<usize>) -> CliResult<usize> {
        match self.get(key) {
            Some(v) => v
                .parse()
                .map_err(|_| CliError::Config(format!("'{key}' must be a non-negative integer, got '{v}'"))),
            None => default.ok_or_else(|| CliError::Config(format!("missing required key '{key}'"))),
        }
    }

    pub fn list(&self, key: &str) -> CliResult<Vec<f64>> {
        match self.get(key) {
            None => Ok(vec![]),
            Some(v) if v.trim().is_empty() => Ok(vec![]),
            Some(v) => v.split(',').map(|s| parse_f64(key, s.trim())).collect(),
        }
    }

    pub fn model(&self) -> CliResult<ModelSpec> {
        let name = self.require("model.name")?;
        let q_bar = self.f64_or("model.q_bar", Some(1.0))?;
        let beta = self.opt_f64("model.beta")?;
        if !(q_bar > 0.0) || !q_bar.is_finite() {
            return Err(CliError::Config(format!("model.q_bar must be positive, got {q_bar}")));
        }
        Ok(builtin_model_by_name(name, q_bar, beta)?)
    }

    /// Grid from `x_left`, `x_right` and either `n` or `dx`.
    pub fn grid(&self) -> CliResult<Grid> {
        let xl = self.f64_or("grid.x_left", None)?;
        let xr = self.f64_or("grid.x_right", None)?;
        match (self.get("grid.n"), self.get("grid.dx")) {
            (Some(_), Some(_)) => Err(CliError::Config("give either grid.n or grid.dx, not both".into())),
            (Some(_), None) => Ok(Grid::new(xl, xr, self.usize_or("grid.n", None)?)?),
            (None, Some(_)) => self.grid_with_spacing(self.f64_or("grid.dx", None)?),
            (None, None) => Err(CliError::Config("missing grid.n (or grid.dx)".into())),
        }
    }

    pub fn grid_with_spacing(&self, dx: f64) -> CliResult<Grid> {
        let xl = self.f64_or("grid.x_left", None)?;
        let xr = self.f64_or("grid.x_right", None)?;
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(CliError::Config(format!("grid spacing must be positive, got {dx}")));
        }
        Ok(Grid::with_spacing(xl, xr, dx)?)
    }

    /// The initial datum as a piecewise-smooth function, if the preset has one.
    pub fn datum(&self, model: &ModelSpec) -> CliResult<DatumSource> {
        let preset = self.require("datum.preset")?;
        let p = self.list("datum.params")?;
        let need = |n: usize| -> CliResult<()> {
            if p.len() == n {
                Ok(())
            } else {
                Err(CliError::Config(format!(
                    "datum preset '{preset}' takes {n} parameters in datum.params, got {}",
                    p.len()
                )))
            }
        };
        let d = match preset {
            "constant" => {
                need(1)?;
                InitialDatum::constant(p[0])
            }
            "riemann" => {
                need(3)?;
                InitialDatum::riemann(p[0], p[1], p[2])
            }
            "step" => {
                need(1)?;
                InitialDatum::step(p[0])
            }
            "pulse" => {
                need(3)?;
                InitialDatum::pulse(p[0], p[1], p[2])?
            }
            "bump" => {
                need(3)?;
                InitialDatum::bump(p[0], p[1], p[2])?
            }
            "gaussian" => {
                need(3)?;
                InitialDatum::gaussian(p[0], p[1], p[2])?
            }
            "sawtooth" => {
                need(4)?;
                if p[0] < 1.0 || p[0].fract() != 0.0 {
                    return Err(CliError::Config(format!(
                        "sawtooth tooth count must be a positive integer, got {}",
                        p[0]
                    )));
                }
                InitialDatum::sawtooth(p[0] as usize, p[1], p[2], p[3])?
            }
            "wave" => {
                need(2)?;
                return Ok(DatumSource::Wave {
                    b_minus: p[0],
                    b_plus: p[1],
                    profile: Box::new(satburgers_core::exact_solutions::wave_profile(model, p[0], p[1], &[])?),
                });
            }
            "csv" => {
                let path = self.resolved_path(self.require("datum.csv")?);
                let (xs, us) = crate::io::read_xu_csv(&path)?;
                let jumps = self.list("datum.jumps")?;
                InitialDatum::tabulated(&xs, &us, &jumps)?
            }
            other => {
                return Err(CliError::Config(format!(
                "unknown datum.preset '{other}' (constant, riemann, step, pulse, bump, gaussian, sawtooth, wave, csv)"
            )))
            }
        };
        Ok(DatumSource::Function(d))
    }

    /// Samples the datum on `grid`, mollified when `datum.mollify` is set.
    pub fn initial_field(&self, model: &ModelSpec, grid: Grid) -> CliResult<GridField> {
        let h = self.opt_f64("datum.mollify")?;
        match (self.datum(model)?, h) {
            (DatumSource::Function(d), Some(h)) => Ok(mollify(&d, &MollifierKernel::default(), h, grid)?),
            (DatumSource::Function(d), None) => Ok(d.sample(grid)?),
            (DatumSource::Wave { .. }, Some(_)) => Err(CliError::Config(
                "datum.mollify does not apply to the wave preset".into(),
            )),
            (DatumSource::Wave { profile, .. }, None) => Ok(profile.field(grid, 0.0, 0.0)?),
        }
    }

    /// Solver settings for a grid of spacing `dx`; `solver.epsilon = dx`
    /// ties the viscosity to the spacing.
    pub fn solver(&self, dx: f64) -> CliResult<SolverConfig> {
        let t_end = self.f64_or("solver.t_end", None)?;
        let epsilon = match self.require("solver.epsilon")? {
            "dx" => dx,
            v => parse_f64("solver.epsilon", v)?,
        };
        let mut cfg = SolverConfig::new(epsilon, t_end);
        cfg.cfl_safety = self.f64_or("solver.cfl_safety", Some(cfg.cfl_safety))?;
        if let Some(b) = self.get("solver.boundary") {
            cfg.boundary = b.parse::<Boundary>()?;
        }
        let mut times = self.list("solver.snapshot_times")?;
        if let Some(k) = self.get("solver.snapshot_count") {
            let k: usize = k
                .parse()
                .map_err(|_| CliError::Config(format!("solver.snapshot_count must be an integer, got '{k}'")))?;
            if k == 0 {
                return Err(CliError::Config("solver.snapshot_count must be at least 1".into()));
            }
            times.extend((0..=k).map(|i| if i == k { t_end } else { t_end * i as f64 / k as f64 }));
        }
        cfg.snapshot_times = times;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn qlim_options(&self, model: &ModelSpec) -> CliResult<QLimOptions> {
        let mut o = QLimOptions::for_model(model);
        let sweep = self.list("verify.h_sweep")?;
        if !sweep.is_empty() {
            o.h_sweep = sweep
                .iter()
                .map(|&h| {
                    if h >= 1.0 && h.fract() == 0.0 {
                        Ok(h as usize)
                    } else {
                        Err(CliError::Config(format!(
                            "verify.h_sweep entries are cell counts, got {h}"
                        )))
                    }
                })
                .collect::<CliResult<_>>()?;
        }
        Ok(o)
    }
}

pub enum DatumSource {
    Function(InitialDatum),
    Wave {
        b_minus: f64,
        b_plus: f64,
        profile: Box<satburgers_core::WaveProfile>,
    },
}

fn parse_f64(key: &str, v: &str) -> CliResult<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| CliError::Config(format!("'{key}' must be a number, got '{v}'")))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Config(format!("'{key}' must be finite, got '{v}'")))
    }
}
