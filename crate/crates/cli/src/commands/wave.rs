use serde_json::json;

use satburgers_core::exact_solutions::{wave_profile, WaveClass};
use satburgers_core::numerics::linspace;

use super::{model_json, num, plots_dir, write_meta, Options};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{ensure_dir, fmt_f64, write_csv, write_json};
use crate::plot::{Plot, Series};

pub fn run(cfg: &RunConfig, opts: &Options) -> CliResult<()> {
    let model = cfg.model()?;
    let b_minus = cfg.f64_or("wave.b_minus", None)?;
    let b_plus = cfg.f64_or("wave.b_plus", None)?;
    let xi_min = cfg.f64_or("wave.xi_min", Some(-10.0))?;
    let xi_max = cfg.f64_or("wave.xi_max", Some(10.0))?;
    let n = cfg.usize_or("wave.n", Some(401))?;
    if !(xi_max > xi_min) || n < 2 {
        return Err(CliError::Config("wave needs xi_min < xi_max and n >= 2".into()));
    }
    let xi = linspace(xi_min, xi_max, n);
    let p = wave_profile(&model, b_minus, b_plus, &xi)?;
    let q_hat: Vec<f64> = xi.iter().map(|&x| p.q_hat(x)).collect();

    let out = &opts.out;
    ensure_dir(out)?;
    let rows = xi
        .iter()
        .zip(&p.b_values)
        .zip(&q_hat)
        .map(|((x, b), q)| vec![fmt_f64(*x), fmt_f64(*b), fmt_f64(*q)]);
    write_csv(&out.join("wave.csv"), &["xi", "b", "q_hat"], rows)?;
    let (class, b1, b2) = match p.class {
        WaveClass::Continuous => ("continuous", None, None),
        WaveClass::Discontinuous { b1, b2 } => ("discontinuous", Some(b1), Some(b2)),
        WaveClass::NoWave => ("none", None, None),
    };
    let summary = json!({
        "class": class,
        "b_minus": b_minus,
        "b_plus": b_plus,
        "speed": p.speed,
        "m": p.m,
        "argmin_b": p.argmin_b,
        "q_minus_inf": model.dissipation.q_minus_inf(),
        "b1": b1,
        "b2": b2,
        "quadrature_error": num(p.quadrature_error),
        "tail_gap": [p.tail_gap.0, p.tail_gap.1],
    });
    write_json(&out.join("wave.json"), &summary)?;
    write_meta(
        out,
        "wave",
        cfg,
        json!({ "model": model_json(&model), "wave": summary }),
    )?;

    if opts.svg {
        let plots = plots_dir(out)?;
        Plot::new(format!("traveling wave ({class})"), "xi", "value")
            .with(Series::new(
                "b",
                xi.iter().copied().zip(p.b_values.iter().copied()).collect(),
            ))
            .with(Series::new(
                "Q(b')",
                xi.iter().copied().zip(q_hat.iter().copied()).collect(),
            ))
            .save(&plots.join("wave.svg"))?;
    }
    Ok(())
}
