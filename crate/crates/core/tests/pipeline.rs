//! End-to-end runs through the public API, written to disk and read back the
//! way downstream plotting consumes them.

use std::fs;
use std::path::PathBuf;

use gkp_core::experiments::{run_stabilization, StabilizationSpec};
use gkp_core::output::{config_hash, gap_table_csv, write_trajectory, write_wigner, TRAJECTORY_COLUMNS};
use gkp_core::spectral::{spectral_gap, ReducedParams, RefinementSpec};
use gkp_core::states::{build_codeword, GkpParams, QuantumState};
use gkp_core::wigner::{wigner, PhaseGrid};
use serde_json::{json, Value};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gkp-core-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<Option<f64>>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| if c.is_empty() { None } else { Some(c.parse().unwrap()) }).collect())
        .collect();
    (header, rows)
}

#[test]
fn stabilization_trajectory_round_trips() {
    let dim = 60;
    let params = GkpParams::qubit(0.25).unwrap();
    let spec = StabilizationSpec {
        t_final: 3.0,
        target_epsilons: vec![0.2, 0.25],
        ..StabilizationSpec::for_lattice(2)
    };
    let report = run_stabilization(dim, &params, &QuantumState::vacuum(dim).unwrap(), &spec).unwrap();
    let dir = scratch("traj");
    let model = json!({ "dim": dim, "epsilon": 0.25, "eta": params.eta });
    let csv = write_trajectory(&dir, "run", &report.record, &model, &spec.tolerance).unwrap();

    let (header, rows) = parse_csv(&fs::read_to_string(&csv).unwrap());
    assert_eq!(header, TRAJECTORY_COLUMNS);
    assert_eq!(rows.len(), report.record.times.len());
    let n = report.record.series("N").unwrap();
    for (row, (&t, &v)) in rows.iter().zip(report.record.times.iter().zip(n)) {
        assert_eq!(row.len(), TRAJECTORY_COLUMNS.len());
        assert!((row[0].unwrap() - t).abs() <= 1e-9 * t.max(1.0));
        assert!((row[1].unwrap() - v).abs() <= 1e-9 * v.max(1.0));
        // Every column is populated for the qubit lattice with a target.
        assert!(row.iter().all(Option::is_some));
    }
    let last = rows.last().unwrap();
    assert!((last[6].unwrap() - report.final_fidelity).abs() < 1e-8);

    let sidecar: Value = serde_json::from_str(&fs::read_to_string(dir.join("run.json")).unwrap()).unwrap();
    let solver = serde_json::to_value(spec.tolerance).unwrap();
    assert_eq!(sidecar["config_hash"], config_hash(&json!({ "model": model, "solver": solver })));
    assert_eq!(sidecar["final_time"], 3.0);
    assert!(sidecar["diagnostics"]["max_trace_deviation"].as_f64().unwrap() <= 1e-6);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn wigner_sidecar_describes_the_grid() {
    let dim = 80;
    let params = GkpParams::qunaught(0.3).unwrap();
    let state = build_codeword(dim, &params, 0).unwrap();
    let grid = PhaseGrid::square(6.0, 61).unwrap();
    let map = wigner(&state, &grid).unwrap();
    let dir = scratch("wig");
    let csv = write_wigner(&dir, "code", &map, &json!({ "label": "code" })).unwrap();
    let sidecar: Value = serde_json::from_str(&fs::read_to_string(dir.join("code.json")).unwrap()).unwrap();
    assert_eq!(sidecar["label"], "code");
    assert_eq!(sidecar["dim"], dim);
    assert_eq!(sidecar["x_range"], json!([-6.0, 6.0]));
    assert!((sidecar["normalization"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    assert!(!fs::read_to_string(&csv).unwrap().is_empty());
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn gap_table_matches_the_closed_form() {
    let rows: Vec<_> = [0.15, 0.35]
        .into_iter()
        .map(|s| (spectral_gap(&ReducedParams::new(s).unwrap(), &RefinementSpec::default()).unwrap(), None))
        .collect();
    let text = gap_table_csv(&rows);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("sigma,lambda1,gamma,n_grid,converged"));
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        let sigma: f64 = cells[0].parse().unwrap();
        let lambda1: f64 = cells[1].parse().unwrap();
        assert!((lambda1 - (1.0 - sigma)).abs() < 1e-3 * (1.0 - sigma));
        // No physical rate without epsilon and eta.
        assert_eq!(cells[2], "");
        assert_eq!(cells[4], "true");
    }
}
