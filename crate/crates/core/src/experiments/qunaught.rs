//! Steady states of the qunaught lattice under photon loss.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stabilizer_model;
use crate::error::{Error, Result};
use crate::fock::Oscillator;
use crate::lindblad::{steady_state, SteadySpec, SteadyState};
use crate::states::{uhlmann_fidelity, GkpParams, QuantumState};
use crate::wigner::{peak_spacing, wigner, PhaseGrid, WignerMap};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QunaughtSpec {
    pub dim: usize,
    pub epsilon: f64,
    pub kappa_values: Vec<f64>,
    pub steady: SteadySpec,
    /// Half-width of the square Wigner grid.
    pub wigner_extent: f64,
    pub wigner_points: usize,
    /// Peaks below this fraction of the tallest are ignored when measuring
    /// the lattice spacing.
    pub peak_fraction: f64,
}

impl QunaughtSpec {
    pub fn new(dim: usize, epsilon: f64, kappa_values: Vec<f64>) -> Self {
        Self {
            dim,
            epsilon,
            kappa_values,
            steady: SteadySpec::default(),
            wigner_extent: 7.0,
            wigner_points: 141,
            peak_fraction: 0.1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct QunaughtPoint {
    pub kappa: f64,
    pub steady: SteadyState,
    pub wigner: WignerMap,
    /// `|tr(exp(i 2 eta q) rho)|`.
    pub visibility: f64,
    /// Median peak spacing of the position and momentum marginals.
    pub spacing_q: Option<f64>,
    pub spacing_p: Option<f64>,
    pub mean_number: f64,
}

#[derive(Clone, Debug)]
pub struct QunaughtStudy {
    pub params: GkpParams,
    pub points: Vec<QunaughtPoint>,
}

impl QunaughtStudy {
    /// Visibility strictly decreases along the (ascending) kappa list.
    pub fn strictly_decreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].visibility < w[0].visibility)
    }
}

/// Steady state from vacuum for every loss rate, in parallel.
pub fn run_qunaught_noise_study(spec: &QunaughtSpec) -> Result<QunaughtStudy> {
    if spec.kappa_values.is_empty() {
        return Err(Error::InvalidRequest("no loss rates given".into()));
    }
    if spec.kappa_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidRequest("loss rates must be strictly ascending".into()));
    }
    let params = GkpParams::qunaught(spec.epsilon)?;
    let osc = Oscillator::new(spec.dim)?;
    let grid = PhaseGrid::square(spec.wigner_extent, spec.wigner_points)?;
    let modular = osc.q_spectrum.apply_complex(|x| C64::from_polar(1.0, 2.0 * params.eta * x));
    let vacuum = QuantumState::vacuum(spec.dim)?;

    let points = spec
        .kappa_values
        .par_iter()
        .map(|&kappa| {
            let model = stabilizer_model(&osc, &params, kappa)?;
            let steady = steady_state(&model, &vacuum, &spec.steady)?;
            let visibility = steady.state.expectation(&modular)?.norm();
            let mean_number = steady.state.expectation(&osc.number)?.re;
            let map = wigner(&steady.state, &grid)?;
            let spacing_q = peak_spacing(&grid.x, map.x_marginal().as_slice().expect("contiguous"), spec.peak_fraction);
            let spacing_p = peak_spacing(&grid.p, map.p_marginal().as_slice().expect("contiguous"), spec.peak_fraction);
            Ok(QunaughtPoint {
                kappa,
                steady,
                wigner: map,
                visibility,
                spacing_q,
                spacing_p,
                mean_number,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QunaughtStudy { params, points })
}

#[derive(Clone, Debug)]
pub struct Uniqueness {
    pub fidelity: f64,
    pub from_vacuum: SteadyState,
    pub from_coherent: SteadyState,
}

/// Steady states from vacuum and from a coherent state of amplitude `alpha`,
/// compared by Uhlmann fidelity.
pub fn qunaught_uniqueness(dim: usize, epsilon: f64, alpha: f64, spec: &SteadySpec) -> Result<Uniqueness> {
    let params = GkpParams::qunaught(epsilon)?;
    let osc = Oscillator::new(dim)?;
    let model = stabilizer_model(&osc, &params, 0.0)?;
    let vacuum = QuantumState::vacuum(dim)?;
    let coherent = QuantumState::coherent(dim, C64::from(alpha))?;
    let (a, b) = rayon::join(
        || steady_state(&model, &vacuum, spec),
        || steady_state(&model, &coherent, spec),
    );
    let (from_vacuum, from_coherent) = (a?, b?);
    let fidelity = uhlmann_fidelity(&from_vacuum.state, &from_coherent.state)?;
    Ok(Uniqueness {
        fidelity,
        from_vacuum,
        from_coherent,
    })
}
