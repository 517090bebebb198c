//! CSV tables and JSON sidecars consumed by plotting scripts.
//!
//! Every CSV has a header row; floats use `{:.10e}`. Missing values are
//! written as empty fields.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::experiments::SweepCell;
use crate::lindblad::{ToleranceSpec, TrajectoryRecord};
use crate::spectral::GapResult;
use crate::wigner::WignerMap;

pub const TRAJECTORY_COLUMNS: [&str; 7] = ["t", "N", "Z", "X", "Y", "purity", "fidelity"];

fn num(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.10e}"),
        _ => String::new(),
    }
}

/// SHA-256 of the compact JSON encoding, as lowercase hex. `serde_json`
/// keeps object keys sorted, so equal configurations hash equally.
pub fn config_hash(config: &Value) -> String {
    let digest = Sha256::digest(config.to_string().as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn trajectory_csv(record: &TrajectoryRecord) -> String {
    let mut out = TRAJECTORY_COLUMNS.join(",");
    out.push('\n');
    for (i, t) in record.times.iter().enumerate() {
        let col = |name: &str| record.series(name).map(|s| s[i]);
        let row = [
            Some(*t),
            col("N"),
            col("Z"),
            col("X"),
            col("Y"),
            record.purity.get(i).copied(),
            record.fidelity.as_ref().map(|f| f[i]),
        ];
        let cells: Vec<String> = row.into_iter().map(num).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Writes `<name>.csv` and `<name>.json` into `dir`; returns the CSV path.
///
/// The sidecar holds `model` (caller-supplied parameters), the solver
/// settings, the diagnostics summary and the hash of `model` + `solver`.
pub fn write_trajectory(
    dir: &Path,
    name: &str,
    record: &TrajectoryRecord,
    model: &Value,
    solver: &ToleranceSpec,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{name}.csv"));
    fs::write(&csv, trajectory_csv(record))?;
    let solver = serde_json::to_value(solver)?;
    let hash = config_hash(&json!({ "model": model, "solver": solver }));
    let sidecar = json!({
        "columns": TRAJECTORY_COLUMNS,
        "model": model,
        "solver": solver,
        "diagnostics": record.diagnostics,
        "final_time": record.final_time(),
        "config_hash": hash,
    });
    write_json(&dir.join(format!("{name}.json")), &sidecar)?;
    Ok(csv)
}

/// Writes the map as CSV plus a sidecar with its metadata and `extra`.
pub fn write_wigner(dir: &Path, name: &str, map: &WignerMap, extra: &Value) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{name}.csv"));
    fs::write(&csv, map.to_csv())?;
    let mut sidecar = serde_json::to_value(&map.meta)?;
    if let (Value::Object(m), Value::Object(e)) = (&mut sidecar, extra) {
        for (k, v) in e {
            m.insert(k.clone(), v.clone());
        }
    }
    write_json(&dir.join(format!("{name}.json")), &sidecar)?;
    Ok(csv)
}

pub const GAP_COLUMNS: [&str; 5] = ["sigma", "lambda1", "gamma", "n_grid", "converged"];

/// One row per gap result; `gamma` is the matching predicted rate when known.
pub fn gap_table_csv(rows: &[(GapResult, Option<f64>)]) -> String {
    let mut out = GAP_COLUMNS.join(",");
    out.push('\n');
    for (g, gamma) in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            num(Some(g.sigma)),
            num(Some(g.lambda1)),
            num(*gamma),
            g.n_grid,
            g.converged
        );
    }
    out
}

pub const SWEEP_COLUMNS: [&str; 9] = [
    "kappa", "epsilon", "rate", "amplitude", "residual", "t_min", "t_max", "valid", "note",
];

pub fn sweep_table_csv(cells: &[SweepCell]) -> String {
    let mut out = SWEEP_COLUMNS.join(",");
    out.push('\n');
    for c in cells {
        let f = c.fit.as_ref();
        let note = c.invalid_reason.as_deref().unwrap_or("").replace([',', '\n'], ";");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            num(Some(c.kappa)),
            num(Some(c.epsilon)),
            num(f.map(|f| f.rate)),
            num(f.map(|f| f.amplitude)),
            num(f.map(|f| f.residual)),
            num(f.map(|f| f.window[0])),
            num(f.map(|f| f.window[1])),
            c.is_valid(),
            note
        );
    }
    out
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
