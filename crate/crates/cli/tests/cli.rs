use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use satburgers_cli::io::{fmt_f64, read_csv, read_diag, read_field, snapshot_name, write_csv};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_satburgers");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const RIEMANN: &str = "\
model.name = burgers_arctan
model.q_bar = 0.0625
datum.preset = riemann
datum.params = 1, 0, 0
grid.x_left = -1
grid.x_right = 2
grid.n = 151
solver.epsilon = dx
solver.t_end = 0.5
solver.snapshot_count = 5
";

fn solve(dir: &Path, cfg: &Path, out: &str) -> PathBuf {
    let out = dir.join(out);
    let o = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--svg",
        "on",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    v.sort();
    v
}

/// A run directory holding the same two-state profile at every time.
fn stationary_run(dir: &Path, left: f64, right: f64) -> PathBuf {
    let n = 301;
    let (xl, xr) = (-1.0, 2.0);
    let dx = (xr - xl) / (n - 1) as f64;
    fs::create_dir_all(dir).unwrap();
    let mut snaps = vec![];
    for k in 0..=10 {
        let t = 0.05 * k as f64;
        let name = snapshot_name(t);
        let rows = (0..n).map(|i| {
            let x = xl + i as f64 * dx;
            let u = if x < 0.5 { left } else { right };
            vec![fmt_f64(x), fmt_f64(u), fmt_f64(t)]
        });
        write_csv(&dir.join(&name), &["x", "u", "t"], rows).unwrap();
        snaps.push(serde_json::json!({ "t": t, "file": name }));
    }
    let meta = serde_json::json!({
        "config": { "model.name": "burgers_arctan", "model.q_bar": "0.0625" },
        "snapshots": snaps,
    });
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta).unwrap()).unwrap();
    dir.to_path_buf()
}

fn verify(run_dir: &Path, out: &Path) -> (i32, Value) {
    let o = run(&[
        "verify",
        "--run",
        run_dir.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    (code(&o), report)
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "run.cfg", RIEMANN);
    let a = solve(tmp.path(), &cfg, "a");
    let b = solve(tmp.path(), &cfg, "b");
    let (fa, fb) = (csv_files(&a), csv_files(&b));
    assert!(fa.len() >= 3);
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
    assert!(a.join("plots/diagnostics.svg").exists());
}

#[test]
fn meta_json_replays_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "run.cfg", RIEMANN);
    let a = solve(tmp.path(), &cfg, "a");
    let b = solve(tmp.path(), &a.join("meta.json"), "b");
    for (x, y) in csv_files(&a).iter().zip(&csv_files(&b)) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
}

#[test]
fn emitted_csv_parses_back_losslessly() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "run.cfg", RIEMANN);
    let a = solve(tmp.path(), &cfg, "a");
    for f in csv_files(&a) {
        let (header, rows) = read_csv(&f).unwrap();
        let copy = tmp.path().join("copy.csv");
        let h: Vec<&str> = header.iter().map(String::as_str).collect();
        write_csv(&copy, &h, rows.iter().map(|r| r.iter().map(|&v| fmt_f64(v)).collect())).unwrap();
        let (h2, back) = read_csv(&copy).unwrap();
        assert_eq!(header, h2);
        let bits = |r: &[Vec<f64>]| r.iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&rows), bits(&back), "{}", f.display());
    }
    let (xs, us, t) = read_field(&a.join(snapshot_name(0.5))).unwrap();
    assert_eq!((xs.len(), us.len(), t), (151, 151, 0.5));
    assert!(read_diag(&a.join("diag.csv")).unwrap().len() > 10);
}

#[test]
fn missing_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "run.cfg", &RIEMANN.replace("grid.n = 151\n", ""));
    let o = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.n"));
}

#[test]
fn unknown_key_and_bad_values_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    for (name, text) in [
        ("a.cfg", format!("{RIEMANN}grid.colour = red\n")),
        ("b.cfg", RIEMANN.replace("solver.t_end = 0.5", "solver.t_end = -1")),
        ("c.cfg", RIEMANN.replace("q_bar = 0.0625", "q_bar = zero")),
    ] {
        let cfg = write_cfg(tmp.path(), name, &text);
        let o = run(&[
            "solve",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 2, "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn converge_without_a_wave_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "\
model.name = burgers_arctan
datum.preset = wave
datum.params = 0, 1
grid.x_left = -2
grid.x_right = 2
solver.epsilon = dx
solver.t_end = 0.1
study.resolutions = 0.1, 0.05
";
    let cfg = write_cfg(tmp.path(), "c.cfg", text);
    let o = run(&[
        "converge",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn selfsim_rejects_small_beta() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "\
model.name = zero_flux_beta
model.beta = 2
datum.preset = step
datum.params = 1
grid.x_left = -1
grid.x_right = 1
grid.n = 80
solver.epsilon = 0
solver.t_end = 0.1
";
    let cfg = write_cfg(tmp.path(), "s.cfg", text);
    let o = run(&[
        "selfsim",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn wave_reports_both_branch_states() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "w.cfg",
        "model.name = burgers_arctan\nmodel.q_bar = 0.0625\nwave.b_minus = 1\nwave.b_plus = 0\n",
    );
    let out = tmp.path().join("w");
    let o = run(&[
        "wave",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let w: Value = serde_json::from_str(&fs::read_to_string(out.join("wave.json")).unwrap()).unwrap();
    let r = 0.5f64.sqrt();
    assert!((w["b1"].as_f64().unwrap() - (1.0 + r) / 2.0).abs() < 1e-6);
    assert!((w["b2"].as_f64().unwrap() - (1.0 - r) / 2.0).abs() < 1e-6);
    assert_eq!(read_csv(&out.join("wave.csv")).unwrap().1.len(), 401);
}

#[test]
fn verify_accepts_a_computed_shock() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "run.cfg", RIEMANN);
    let a = solve(tmp.path(), &cfg, "a");
    let (c, report) = verify(&a, &tmp.path().join("v"));
    assert_eq!(c, 0, "{report}");
    assert_eq!(report["shocks"].as_array().unwrap().len(), 1);
    assert_eq!(report["passed"], Value::Bool(true));
}

#[test]
fn verify_accepts_a_smooth_run_with_no_shocks() {
    let tmp = tempfile::tempdir().unwrap();
    let text = RIEMANN
        .replace("datum.preset = riemann", "datum.preset = gaussian")
        .replace("datum.params = 1, 0, 0", "datum.params = 0.3, 0.5, 0.3");
    let cfg = write_cfg(tmp.path(), "g.cfg", &text);
    let a = solve(tmp.path(), &cfg, "a");
    let (c, report) = verify(&a, &tmp.path().join("v"));
    assert_eq!(c, 0, "{report}");
    assert!(report["shocks"].as_array().unwrap().is_empty());
}

#[test]
fn verify_rejects_a_stationary_increasing_jump() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = stationary_run(&tmp.path().join("planted"), -0.5, 0.5);
    let (c, report) = verify(&run_dir, &tmp.path().join("v"));
    assert_eq!(c, 1);
    let verdicts = report["condition_E"].as_array().unwrap();
    assert!(verdicts.iter().any(|v| v["satisfied"] == Value::Bool(false)));
}

#[test]
fn verify_rejects_a_stationary_burgers_shock() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = stationary_run(&tmp.path().join("planted"), 1.0, 0.0);
    let (c, report) = verify(&run_dir, &tmp.path().join("v"));
    assert_eq!(c, 1);
    let hug = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "hugoniot")
        .unwrap();
    assert_eq!(hug["passed"], Value::Bool(false));
}

#[test]
fn verify_on_a_malformed_directory_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&[
        "verify",
        "--run",
        tmp.path().to_str().unwrap(),
        "--out",
        tmp.path().join("v").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn converge_without_an_exact_oracle_uses_the_finest_member() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "\
model.name = burgers_arctan
model.q_bar = 0.0625
datum.preset = riemann
datum.params = 1, 0, 0
grid.x_left = -1
grid.x_right = 2
solver.epsilon = dx
solver.t_end = 0.5
study.resolutions = 0.04, 0.02, 0.01, 0.005
";
    let cfg = write_cfg(tmp.path(), "c.cfg", text);
    let out = tmp.path().join("o");
    let o = run(&[
        "converge",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = read_csv(&out.join("study.csv")).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.windows(2).all(|w| w[1][2] < w[0][2]), "{rows:?}");
    assert!(
        rows.windows(2).all(|w| w[1][0] < w[0][0]),
        "dx must be descending: {rows:?}"
    );
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["oracle"]["kind"], "finest_member");
}

#[test]
fn converge_against_the_wave_reports_decreasing_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "\
model.name = burgers_arctan
model.q_bar = 0.25
datum.preset = wave
datum.params = 1, 0
grid.x_left = -6
grid.x_right = 7
grid.dx = 0.05
solver.epsilon = dx
solver.t_end = 0.5
study.resolutions = 0.05, 0.025
study.eps_list = 0.1, 0.05
";
    let cfg = write_cfg(tmp.path(), "c.cfg", text);
    let out = tmp.path().join("o");
    let o = run(&[
        "converge",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--svg",
        "on",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["study.csv", "study_eps.csv"] {
        let (_, rows) = read_csv(&out.join(f)).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[1][2] < rows[0][2], "{f}: {rows:?}");
    }
    assert!(out.join("member_3").is_dir());
    assert!(out.join("plots/convergence.svg").exists());
}

#[test]
fn selfsim_flags_the_jump_until_it_disappears() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "\
model.name = zero_flux_beta
model.beta = 3
model.q_bar = 0.25
datum.preset = step
datum.params = 1
grid.x_left = -1.99375
grid.x_right = 1.99375
grid.n = 320
solver.epsilon = 0
solver.t_end = 1
solver.snapshot_count = 100
";
    let cfg = write_cfg(tmp.path(), "s.cfg", text);
    let out = tmp.path().join("o");
    let o = run(&[
        "selfsim",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["alpha_theory"].as_f64(), Some(0.5));
    let (_, rows) = read_csv(&out.join("jump.csv")).unwrap();
    let flags: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    assert_eq!(flags[0], 1.0);
    assert_eq!(*flags.last().unwrap(), 0.0);
    assert_eq!(flags.windows(2).filter(|w| w[0] != w[1]).count(), 1, "{flags:?}");

    let beta4 = write_cfg(tmp.path(), "b4.cfg", &text.replace("model.beta = 3", "model.beta = 4"));
    let out4 = tmp.path().join("o4");
    let o = run(&[
        "selfsim",
        "--config",
        beta4.to_str().unwrap(),
        "--out",
        out4.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(out4.join("report.json")).unwrap()).unwrap();
    assert!((report["alpha_theory"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
}
