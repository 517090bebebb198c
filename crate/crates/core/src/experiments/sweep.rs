//! Decay-rate sweep over photon loss and regularization with a power-law fit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decay::{run_contrast_decay, DecayFit, DecaySpec};
use crate::error::{Error, Result};
use crate::fit::{fit_kappa_exponent, fit_power_law, LineFit, PowerLawFit, ScalingPoint};
use crate::lindblad::ToleranceSpec;
use crate::states::{Axis, GkpParams};

/// Minimum number of usable cells for the three-parameter fit.
pub const MIN_VALID_CELLS: usize = 6;
/// Cells whose log-space fit residual exceeds this are not used.
pub const MAX_CELL_RESIDUAL: f64 = 0.05;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kappa_values: Vec<f64>,
    pub epsilon_values: Vec<f64>,
    pub eta: f64,
    pub dim: usize,
    pub horizon: f64,
    pub record_interval: f64,
    pub axis: Axis,
    pub tolerance: ToleranceSpec,
}

impl SweepSpec {
    /// The 3x3 grid `kappa in {5e-3, 1e-2, 2e-2}`, `eps in {0.1, 0.15, 0.2}`.
    pub fn desk_scale() -> Self {
        Self {
            kappa_values: vec![5e-3, 1e-2, 2e-2],
            epsilon_values: vec![0.1, 0.15, 0.2],
            eta: std::f64::consts::PI.sqrt(),
            dim: 120,
            horizon: 150.0,
            record_interval: 0.5,
            axis: Axis::Z,
            tolerance: ToleranceSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa_values.is_empty() || self.epsilon_values.is_empty() {
            return Err(Error::InvalidRequest("sweep needs at least one kappa and one epsilon".into()));
        }
        for &k in &self.kappa_values {
            if !(0.0..1.0).contains(&k) {
                return Err(Error::InvalidParameter {
                    name: "kappa",
                    value: k,
                    reason: "relative loss rate must lie in [0, 1)",
                });
            }
        }
        for &e in &self.epsilon_values {
            if !(e > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "epsilon",
                    value: e,
                    reason: "must be positive",
                });
            }
        }
        Ok(())
    }

    /// Cells in row-major order: epsilon outer, kappa inner.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        self.epsilon_values
            .iter()
            .flat_map(|&e| self.kappa_values.iter().map(move |&k| (k, e)))
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepCell {
    pub kappa: f64,
    pub epsilon: f64,
    pub fit: Option<DecayFit>,
    /// Why the cell is excluded from the power-law fit, if it is.
    pub invalid_reason: Option<String>,
}

impl SweepCell {
    pub fn from_outcome(kappa: f64, epsilon: f64, outcome: Result<DecayFit>) -> Self {
        let (fit, invalid_reason) = match outcome {
            Err(e) => (None, Some(e.to_string())),
            Ok(f) if kappa <= 0.0 => (Some(f), Some("zero loss rate".into())),
            Ok(f) if !(f.rate > 0.0) => {
                let r = format!("non-positive rate {}", f.rate);
                (Some(f), Some(r))
            }
            Ok(f) if f.residual > MAX_CELL_RESIDUAL => {
                let r = format!("fit residual {} above {}", f.residual, MAX_CELL_RESIDUAL);
                (Some(f), Some(r))
            }
            Ok(f) => (Some(f), None),
        };
        Self {
            kappa,
            epsilon,
            fit,
            invalid_reason,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.invalid_reason.is_none()
    }

    pub fn rate(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.rate)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    pub fit: PowerLawFit,
    /// Per-epsilon fits of `log gamma` against `log kappa`.
    pub kappa_fits: Vec<(f64, LineFit)>,
}

/// Power-law fit over the valid cells; fails with fewer than
/// [`MIN_VALID_CELLS`] of them.
pub fn fit_cells(cells: &[SweepCell]) -> Result<(PowerLawFit, Vec<(f64, LineFit)>)> {
    let points: Vec<ScalingPoint> = cells
        .iter()
        .filter(|c| c.is_valid())
        .map(|c| ScalingPoint {
            kappa: c.kappa,
            epsilon: c.epsilon,
            gamma: c.rate().expect("valid cells carry a fit"),
        })
        .collect();
    if points.len() < MIN_VALID_CELLS {
        return Err(Error::SweepFailure {
            valid: points.len(),
            total: cells.len(),
            required: MIN_VALID_CELLS,
        });
    }
    let fit = fit_power_law(&points)?;
    let mut epsilons: Vec<f64> = points.iter().map(|p| p.epsilon).collect();
    epsilons.sort_by(f64::total_cmp);
    epsilons.dedup();
    let mut kappa_fits = Vec::new();
    for e in epsilons {
        let row: Vec<ScalingPoint> = points.iter().copied().filter(|p| p.epsilon == e).collect();
        if row.len() >= 2 {
            kappa_fits.push((e, fit_kappa_exponent(&row)?));
        }
    }
    Ok((fit, kappa_fits))
}

/// Runs every cell in parallel; results keep the order of [`SweepSpec::cells`].
pub fn run_scaling_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let cells: Vec<SweepCell> = spec
        .cells()
        .into_par_iter()
        .map(|(kappa, epsilon)| {
            let outcome = GkpParams::with_eta(2, spec.eta, epsilon).and_then(|params| {
                let decay = DecaySpec {
                    horizon: spec.horizon,
                    record_interval: spec.record_interval,
                    tolerance: spec.tolerance,
                    ..DecaySpec::new(spec.dim, params, kappa, spec.axis)
                };
                run_contrast_decay(&decay)
            });
            SweepCell::from_outcome(kappa, epsilon, outcome)
        })
        .collect();
    let (fit, kappa_fits) = fit_cells(&cells)?;
    Ok(SweepResult { cells, fit, kappa_fits })
}
