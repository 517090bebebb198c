//! Stabilization of a grid state from an arbitrary initial state.

use serde::{Deserialize, Serialize};

use super::{stabilizer_model, standard_record};
use crate::error::{Error, Result};
use crate::fock::Oscillator;
use crate::lindblad::{integrate, ToleranceSpec, TrajectoryRecord};
use crate::states::{build_codeword, build_logical_state, fidelity, GkpParams, LogicalLabel, QuantumState};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilizationSpec {
    pub kappa: f64,
    pub t_final: f64,
    pub record_interval: f64,
    /// Regularization values tried for the finite-energy target; the best
    /// final fidelity wins.
    pub target_epsilons: Vec<f64>,
    pub tolerance: ToleranceSpec,
}

impl StabilizationSpec {
    /// Horizon 30 for the qubit lattice, 200 for the qunaught, which relaxes
    /// an order of magnitude more slowly. Targets scanned on `[0.1, 0.2]` in
    /// steps of 0.005.
    pub fn for_lattice(d: u32) -> Self {
        Self {
            kappa: 0.0,
            t_final: if d == 1 { 200.0 } else { 30.0 },
            record_interval: 0.5,
            target_epsilons: (0..=20).map(|i| 0.1 + 0.005 * i as f64).collect(),
            tolerance: ToleranceSpec::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct StabilizationReport {
    pub record: TrajectoryRecord,
    pub target: LogicalLabel,
    pub target_epsilon: f64,
    pub final_fidelity: f64,
    /// `(epsilon', final fidelity)` for every candidate target.
    pub scan: Vec<(f64, f64)>,
    pub final_number: f64,
}

/// Magic state for the qubit lattice, the codeword for the qunaught.
fn target_state(dim: usize, params: &GkpParams, epsilon: f64) -> Result<(LogicalLabel, QuantumState)> {
    let p = params.with_epsilon(epsilon)?;
    if params.d == 2 {
        Ok((LogicalLabel::Magic, build_logical_state(dim, &p, LogicalLabel::Magic)?))
    } else {
        Ok((LogicalLabel::PlusZ, build_codeword(dim, &p, 0)?))
    }
}

/// Integrates the stabilizing dynamics from `rho0` and reports the fidelity
/// series against the best-matching finite-energy target.
pub fn run_stabilization(
    dim: usize,
    params: &GkpParams,
    rho0: &QuantumState,
    spec: &StabilizationSpec,
) -> Result<StabilizationReport> {
    if spec.target_epsilons.is_empty() {
        return Err(Error::InvalidRequest("no target regularization to compare against".into()));
    }
    let osc = Oscillator::new(dim)?;
    let model = stabilizer_model(&osc, params, spec.kappa)?;
    let mut record_spec = standard_record(&osc, params, spec.record_interval)?;
    record_spec.store_states = true;
    let mut record = integrate(&model, rho0, spec.t_final, &spec.tolerance, &record_spec)?;

    let final_state = QuantumState::mixed_unchecked(record.final_state.clone());
    let mut scan = Vec::with_capacity(spec.target_epsilons.len());
    let mut best: Option<(f64, f64, LogicalLabel, QuantumState)> = None;
    for &eps in &spec.target_epsilons {
        let (label, target) = target_state(dim, params, eps)?;
        let f = fidelity(&final_state, &target)?;
        scan.push((eps, f));
        if best.as_ref().is_none_or(|b| f > b.1) {
            best = Some((eps, f, label, target));
        }
    }
    let (target_epsilon, final_fidelity, label, target) = best.expect("non-empty scan");

    let series = record
        .states
        .iter()
        .map(|rho| fidelity(&QuantumState::mixed_unchecked(rho.clone()), &target))
        .collect::<Result<Vec<_>>>()?;
    record.fidelity = Some(series);
    record.states.clear();
    let final_number = record
        .series("N")
        .and_then(|s| s.last().copied())
        .unwrap_or(f64::NAN);
    Ok(StabilizationReport {
        record,
        target: label,
        target_epsilon,
        final_fidelity,
        scan,
        final_number,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_horizon_gives_vacuum_overlap() {
        let dim = 80;
        let params = GkpParams::qubit(0.2).unwrap();
        let spec = StabilizationSpec {
            t_final: 0.0,
            target_epsilons: vec![0.2],
            ..StabilizationSpec::for_lattice(2)
        };
        let vac = QuantumState::vacuum(dim).unwrap();
        let report = run_stabilization(dim, &params, &vac, &spec).unwrap();
        let target = build_logical_state(dim, &params, LogicalLabel::Magic).unwrap();
        let expected = fidelity(&vac, &target).unwrap();
        assert!((report.final_fidelity - expected).abs() < 1e-12);
        assert_eq!(report.record.fidelity.as_ref().unwrap().len(), 1);
    }

    #[test]
    fn short_run_raises_fidelity_and_reports_scan() {
        let dim = 80;
        let params = GkpParams::qubit(0.2).unwrap();
        let spec = StabilizationSpec {
            t_final: 4.0,
            record_interval: 1.0,
            target_epsilons: vec![0.15, 0.2],
            ..StabilizationSpec::for_lattice(2)
        };
        let vac = QuantumState::vacuum(dim).unwrap();
        let report = run_stabilization(dim, &params, &vac, &spec).unwrap();
        let f = report.record.fidelity.as_ref().unwrap();
        assert_eq!(f.len(), 5);
        assert!(f[4] > f[0]);
        assert_eq!(report.scan.len(), 2);
        assert!(report.scan.iter().all(|&(_, v)| v <= report.final_fidelity));
        assert!(report.record.states.is_empty());
        assert!(report.record.series("Y").is_some());
    }

    #[test]
    fn empty_scan_is_rejected() {
        let params = GkpParams::qubit(0.2).unwrap();
        let spec = StabilizationSpec {
            target_epsilons: vec![],
            ..StabilizationSpec::for_lattice(2)
        };
        let vac = QuantumState::vacuum(40).unwrap();
        assert!(run_stabilization(40, &params, &vac, &spec).is_err());
    }
}
