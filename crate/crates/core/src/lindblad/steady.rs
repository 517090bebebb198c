//! Steady states by long-time integration with geometric horizon doubling.

use serde::{Deserialize, Serialize};

use super::{integrate, LindbladModel, RecordSpec, ToleranceSpec};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::states::QuantumState;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadySpec {
    /// Relative residual `||L(rho)||_F / ||rho||_F` to reach.
    pub tolerance: f64,
    /// Length of the first integration chunk.
    pub initial_horizon: f64,
    /// Number of times the chunk length is doubled before giving up.
    pub max_doublings: u32,
    pub solver: ToleranceSpec,
}

impl Default for SteadySpec {
    fn default() -> Self {
        Self {
            tolerance: 1e-7,
            initial_horizon: 20.0,
            max_doublings: 7,
            solver: ToleranceSpec::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub state: QuantumState,
    pub residual: f64,
    /// Total integrated time.
    pub time: f64,
    /// `(time, residual)` after every chunk.
    pub history: Vec<(f64, f64)>,
}

/// Relative generator residual of a density matrix.
pub fn residual(model: &LindbladModel, rho: &CMat) -> Result<f64> {
    let out = model.apply_generator(rho)?;
    Ok(linalg::frobenius_norm(&out) / linalg::frobenius_norm(rho))
}

/// Integrates in chunks of length `T, 2T, 4T, ...` until the residual falls
/// below the tolerance. The qubit model has a degenerate steady space, so
/// the result depends on the basin of the guess by design.
pub fn steady_state(model: &LindbladModel, guess: &QuantumState, spec: &SteadySpec) -> Result<SteadyState> {
    if !(spec.tolerance > 0.0 && spec.initial_horizon > 0.0) {
        return Err(Error::InvalidRequest("steady-state tolerance and horizon must be positive".into()));
    }
    let mut rho = guess.density();
    let mut time = 0.0;
    let mut horizon = spec.initial_horizon;
    let mut history = Vec::new();
    let mut best = (f64::INFINITY, rho.clone(), 0.0);
    let record = RecordSpec::default();

    let r0 = residual(model, &rho)?;
    if r0 <= spec.tolerance {
        return Ok(SteadyState {
            state: QuantumState::mixed_unchecked(rho),
            residual: r0,
            time,
            history: vec![(0.0, r0)],
        });
    }
    for _ in 0..=spec.max_doublings {
        let start = QuantumState::mixed_unchecked(rho);
        let run = integrate(model, &start, horizon, &spec.solver, &record)?;
        rho = run.final_state;
        time += horizon;
        let r = residual(model, &rho)?;
        history.push((time, r));
        if r < best.0 {
            best = (r, rho.clone(), time);
        }
        if r <= spec.tolerance {
            return Ok(SteadyState {
                state: QuantumState::mixed_unchecked(rho),
                residual: r,
                time,
                history,
            });
        }
        horizon *= 2.0;
    }
    Err(Error::NonConvergence {
        best_residual: best.0,
        tolerance: spec.tolerance,
        time: best.2,
        best_state: Box::new(best.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::Oscillator;
    use crate::states::fidelity;
    use num_complex::Complex64 as C64;

    #[test]
    fn loss_relaxes_to_vacuum() {
        let dim = 20;
        let osc = Oscillator::new(dim).unwrap();
        let model = LindbladModel::photon_loss(&osc, 1.0).unwrap();
        let guess = QuantumState::coherent(dim, C64::new(1.2, -0.7)).unwrap();
        let spec = SteadySpec {
            initial_horizon: 5.0,
            ..SteadySpec::default()
        };
        let out = steady_state(&model, &guess, &spec).unwrap();
        assert!(out.residual <= 1e-7);
        let f = fidelity(&out.state, &QuantumState::vacuum(dim).unwrap()).unwrap();
        assert!(f >= 1.0 - 1e-6);
    }

    #[test]
    fn already_steady_guess_returns_immediately() {
        let osc = Oscillator::new(8).unwrap();
        let model = LindbladModel::photon_loss(&osc, 1.0).unwrap();
        let out = steady_state(&model, &QuantumState::vacuum(8).unwrap(), &SteadySpec::default()).unwrap();
        assert_eq!(out.time, 0.0);
    }

    #[test]
    fn non_convergence_carries_best_state() {
        let dim = 12;
        let osc = Oscillator::new(dim).unwrap();
        let model = LindbladModel::photon_loss(&osc, 0.01).unwrap();
        let guess = QuantumState::fock(dim, 4).unwrap();
        let spec = SteadySpec {
            initial_horizon: 0.5,
            max_doublings: 1,
            ..SteadySpec::default()
        };
        match steady_state(&model, &guess, &spec) {
            Err(Error::NonConvergence { best_residual, best_state, .. }) => {
                assert!(best_residual > 1e-7);
                assert_eq!(best_state.nrows(), dim);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
