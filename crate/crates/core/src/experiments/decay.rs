//! Decay of the contrast between two opposite logical states.

use serde::{Deserialize, Serialize};

use super::{stabilizer_model, standard_record};
use crate::error::{Error, Result};
use crate::fit::fit_exponential;
use crate::fock::Oscillator;
use crate::lindblad::{integrate, ToleranceSpec, TrajectoryRecord};
use crate::states::{build_logical_state, Axis, GkpParams};

/// Relative band around the final photon number that ends the transient.
pub const SETTLE_BAND: f64 = 0.05;
/// Contrast below which the signal is treated as lost.
pub const CONTRAST_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecaySpec {
    pub dim: usize,
    pub params: GkpParams,
    pub kappa: f64,
    pub axis: Axis,
    pub horizon: f64,
    pub record_interval: f64,
    pub tolerance: ToleranceSpec,
}

impl DecaySpec {
    pub fn new(dim: usize, params: GkpParams, kappa: f64, axis: Axis) -> Self {
        Self {
            dim,
            params,
            kappa,
            axis,
            horizon: 150.0,
            record_interval: 0.5,
            tolerance: ToleranceSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub observable: String,
    pub kappa: f64,
    pub epsilon: f64,
    /// Fitted interval `[t_min, t_max]`.
    pub window: [f64; 2],
    pub rate: f64,
    pub amplitude: f64,
    /// RMS residual of `log C(t)`.
    pub residual: f64,
    pub points: usize,
    /// Time at which both photon numbers had settled.
    pub transient_end: f64,
}

#[derive(Clone, Debug)]
pub struct ContrastRun {
    pub fit: DecayFit,
    pub times: Vec<f64>,
    pub contrast: Vec<f64>,
    pub plus: TrajectoryRecord,
    pub minus: TrajectoryRecord,
}

/// First index from which `n` stays within the settle band of its last value.
fn settle_index(n: &[f64]) -> usize {
    let last = *n.last().expect("non-empty series");
    n.iter()
        .rposition(|v| (v - last).abs() > SETTLE_BAND * last.abs())
        .map_or(0, |i| i + 1)
}

/// Runs the `+` and `-` eigenstates of `axis` in parallel and fits the
/// contrast `(<O>_+ - <O>_-)/2` after the transient.
pub fn run_contrast(spec: &DecaySpec) -> Result<ContrastRun> {
    if spec.params.d != 2 {
        return Err(Error::InvalidRequest("contrast decay needs the qubit lattice".into()));
    }
    let osc = Oscillator::new(spec.dim)?;
    let model = stabilizer_model(&osc, &spec.params, spec.kappa)?;
    let record = standard_record(&osc, &spec.params, spec.record_interval)?;
    let (plus_label, minus_label) = spec.axis.eigenstates();
    let plus0 = build_logical_state(spec.dim, &spec.params, plus_label)?;
    let minus0 = build_logical_state(spec.dim, &spec.params, minus_label)?;
    let (plus, minus) = rayon::join(
        || integrate(&model, &plus0, spec.horizon, &spec.tolerance, &record),
        || integrate(&model, &minus0, spec.horizon, &spec.tolerance, &record),
    );
    let (plus, minus) = (plus?, minus?);

    let name = spec.axis.name();
    let (op, om) = (plus.series(name).expect("recorded"), minus.series(name).expect("recorded"));
    let contrast: Vec<f64> = op.iter().zip(om).map(|(a, b)| 0.5 * (a - b)).collect();
    let times = plus.times.clone();

    let start = settle_index(plus.series("N").expect("recorded")).max(settle_index(minus.series("N").expect("recorded")));
    let end = contrast
        .iter()
        .position(|&c| c < CONTRAST_FLOOR)
        .unwrap_or(contrast.len());
    if end <= start {
        let i = end.min(contrast.len() - 1);
        return Err(Error::UnderflowHorizon {
            t: times[i],
            contrast: contrast[i],
        });
    }
    if end - start < 3 {
        return Err(Error::FitFailure(format!(
            "only {} samples between settling at t = {} and the end of the signal",
            end - start,
            times[start]
        )));
    }
    let exp = fit_exponential(&times[start..end], &contrast[start..end])?;
    let fit = DecayFit {
        observable: name.to_string(),
        kappa: spec.kappa,
        epsilon: spec.params.epsilon,
        window: [times[start], times[end - 1]],
        rate: exp.rate,
        amplitude: exp.amplitude,
        residual: exp.residual,
        points: exp.points,
        transient_end: times[start],
    };
    Ok(ContrastRun {
        fit,
        times,
        contrast,
        plus,
        minus,
    })
}

pub fn run_contrast_decay(spec: &DecaySpec) -> Result<DecayFit> {
    Ok(run_contrast(spec)?.fit)
}
