//! CSV and JSON files. Numbers are written in the shortest decimal form
//! that parses back to the same binary64 value.

use std::fs;
use std::path::Path;

use satburgers_core::solver::DiagRow;
use satburgers_core::{DiagnosticsReport, GridField};

use crate::error::{CliError, CliResult};

pub const FIELD_HEADER: [&str; 3] = ["x", "u", "t"];
pub const DIAG_HEADER: [&str; 8] = ["step", "t", "dt", "sup", "l1", "tv", "qbv", "mass"];

/// Shortest round-trip representation (exponent form for tiny or huge values).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn snapshot_name(t: f64) -> String {
    format!("snap_{}.csv", fmt_f64(t))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Config(format!("{}: malformed CSV: {other:?}", path.display())),
    }
}

/// Writes a header and rows of pre-formatted cells.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Header and numeric rows of a CSV file.
pub fn read_csv(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Config(format!("{}: row {}: '{s}' is not a number", path.display(), i + 1)))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn column(header: &[String], name: &str, path: &Path) -> CliResult<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Config(format!("{}: missing column '{name}'", path.display())))
}

pub fn write_field(path: &Path, f: &GridField) -> CliResult<()> {
    let t = fmt_f64(f.t);
    let rows =
        f.u.iter()
            .enumerate()
            .map(|(i, &u)| vec![fmt_f64(f.grid.x(i)), fmt_f64(u), t.clone()]);
    write_csv(path, &FIELD_HEADER, rows)
}

/// (x, u, t) columns of a snapshot file.
pub fn read_field(path: &Path) -> CliResult<(Vec<f64>, Vec<f64>, f64)> {
    let (header, rows) = read_csv(path)?;
    let (ix, iu, it) = (
        column(&header, "x", path)?,
        column(&header, "u", path)?,
        column(&header, "t", path)?,
    );
    if rows.is_empty() {
        return Err(CliError::Config(format!("{}: no data rows", path.display())));
    }
    let t = rows[0][it];
    if rows.iter().any(|r| r[it] != t) {
        return Err(CliError::Config(format!(
            "{}: mixed times in one snapshot",
            path.display()
        )));
    }
    Ok((
        rows.iter().map(|r| r[ix]).collect(),
        rows.iter().map(|r| r[iu]).collect(),
        t,
    ))
}

/// (x, u) columns of a datum file.
pub fn read_xu_csv(path: &Path) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let (header, rows) = read_csv(path)?;
    let (ix, iu) = (column(&header, "x", path)?, column(&header, "u", path)?);
    Ok((
        rows.iter().map(|r| r[ix]).collect(),
        rows.iter().map(|r| r[iu]).collect(),
    ))
}

pub fn write_diag(path: &Path, d: &DiagnosticsReport) -> CliResult<()> {
    let rows = d.all_rows().map(|r| {
        vec![
            r.step.to_string(),
            fmt_f64(r.t),
            fmt_f64(r.dt),
            fmt_f64(r.sup),
            fmt_f64(r.l1),
            fmt_f64(r.tv),
            fmt_f64(r.qbv),
            fmt_f64(r.mass),
        ]
    });
    write_csv(path, &DIAG_HEADER, rows)
}

pub fn read_diag(path: &Path) -> CliResult<Vec<DiagRow>> {
    let (header, rows) = read_csv(path)?;
    if header != DIAG_HEADER {
        return Err(CliError::Config(format!(
            "{}: unexpected diagnostics header {header:?}",
            path.display()
        )));
    }
    Ok(rows
        .into_iter()
        .map(|r| DiagRow {
            step: r[0] as usize,
            t: r[1],
            dt: r[2],
            sup: r[3],
            l1: r[4],
            tv: r[5],
            qbv: r[6],
            mass: r[7],
        })
        .collect())
}

pub fn write_json(path: &Path, v: &serde_json::Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(v).map_err(|e| CliError::Run(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json(path: &Path) -> CliResult<serde_json::Value> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: invalid JSON: {e}", path.display())))
}
