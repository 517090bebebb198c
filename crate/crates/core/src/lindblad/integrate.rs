//! Dormand–Prince 5(4) integration of the master equation.

use ndarray::Zip;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::LindbladModel;
use crate::error::{Error, Result};
use crate::fock::FockOperator;
use crate::linalg::{self, CMat};
use crate::states::{fidelity, QuantumState};

/// Per-step corrections larger than this abort the run.
const BREACH: f64 = 1e-4;
/// Allowed accumulated trace renormalization per unit time.
const DRIFT_PER_TIME: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSpec {
    pub rtol: f64,
    pub atol: f64,
    /// Optional cap on the step size.
    pub max_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_step: None,
            max_steps: 2_000_000,
        }
    }
}

impl ToleranceSpec {
    pub fn new(rtol: f64, atol: f64) -> Result<Self> {
        for (name, v) in [("rtol", rtol), ("atol", atol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "tolerances must lie in (0, 1)",
                });
            }
        }
        Ok(Self {
            rtol,
            atol,
            ..Self::default()
        })
    }
}

/// What to evaluate on the recording grid.
#[derive(Clone, Debug, Default)]
pub struct RecordSpec {
    /// Spacing of the uniform recording grid; `None` records only the
    /// endpoints.
    pub interval: Option<f64>,
    /// Named Hermitian observables.
    pub observables: Vec<(String, FockOperator)>,
    /// Pure state for the fidelity series.
    pub target: Option<QuantumState>,
    /// Keep density matrices at every recorded time.
    pub store_states: bool,
    /// Smallest eigenvalue at every recorded time (one Hermitian eigensolve each).
    pub track_positivity: bool,
}

impl RecordSpec {
    pub fn every(interval: f64) -> Self {
        Self {
            interval: Some(interval),
            track_positivity: true,
            ..Self::default()
        }
    }

    pub fn observe(mut self, name: impl Into<String>, op: FockOperator) -> Self {
        self.observables.push((name.into(), op));
        self
    }

    pub fn with_target(mut self, target: QuantumState) -> Self {
        self.target = Some(target);
        self
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub evaluations: usize,
    pub min_step: f64,
    pub max_step: f64,
    /// Largest single-step `|tr rho - 1|` removed by renormalization.
    pub max_trace_correction: f64,
    /// Sum of all trace corrections.
    pub total_trace_correction: f64,
    /// Largest anti-Hermitian entry removed by symmetrization.
    pub max_hermitian_correction: f64,
    /// Smallest eigenvalue seen at the recorded times.
    pub min_eigenvalue: f64,
    /// Largest `|tr rho - 1|` at the recorded times.
    pub max_trace_deviation: f64,
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub observables: Vec<(String, Vec<f64>)>,
    pub purity: Vec<f64>,
    pub fidelity: Option<Vec<f64>>,
    pub min_eigenvalues: Vec<f64>,
    pub states: Vec<CMat>,
    pub final_state: CMat,
    pub diagnostics: Diagnostics,
}

impl TrajectoryRecord {
    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.observables
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("at least one record")
    }
}

// Dormand–Prince tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Error weights: fifth-order minus embedded fourth-order solution.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Stepper<'a> {
    model: &'a LindbladModel,
    k: [CMat; 7],
    stage: CMat,
    work: CMat,
    evaluations: usize,
}

/// `out = y + h * sum_i a_i k_i`
fn combine(out: &mut CMat, y: &CMat, h: f64, terms: &[(f64, &CMat)]) {
    out.assign(y);
    for (a, k) in terms {
        let s = C64::from(h * a);
        Zip::from(&mut *out).and(*k).for_each(|o, &v| *o += s * v);
    }
}

impl<'a> Stepper<'a> {
    fn new(model: &'a LindbladModel) -> Self {
        let n = model.dim();
        let z = || CMat::zeros((n, n));
        Self {
            model,
            k: [z(), z(), z(), z(), z(), z(), z()],
            stage: z(),
            work: z(),
            evaluations: 0,
        }
    }

    fn eval(&mut self, idx: usize) {
        let (stage, work) = (&self.stage, &mut self.work);
        self.model.generator_into(stage, &mut self.k[idx], work);
        self.evaluations += 1;
    }

    fn eval_at(&mut self, y: &CMat, idx: usize) {
        self.model.generator_into(y, &mut self.k[idx], &mut self.work);
        self.evaluations += 1;
    }

    /// One trial step from `y` with `k[0] = f(y)`; the proposed state goes to
    /// `y_new` and the scaled error norm is returned.
    fn step(&mut self, y: &CMat, h: f64, y_new: &mut CMat, tol: &ToleranceSpec) -> f64 {
        combine(&mut self.stage, y, h, &[(A21, &self.k[0])]);
        self.eval(1);
        combine(&mut self.stage, y, h, &[(A31, &self.k[0]), (A32, &self.k[1])]);
        self.eval(2);
        combine(&mut self.stage, y, h, &[(A41, &self.k[0]), (A42, &self.k[1]), (A43, &self.k[2])]);
        self.eval(3);
        combine(
            &mut self.stage,
            y,
            h,
            &[(A51, &self.k[0]), (A52, &self.k[1]), (A53, &self.k[2]), (A54, &self.k[3])],
        );
        self.eval(4);
        combine(
            &mut self.stage,
            y,
            h,
            &[
                (A61, &self.k[0]),
                (A62, &self.k[1]),
                (A63, &self.k[2]),
                (A64, &self.k[3]),
                (A65, &self.k[4]),
            ],
        );
        self.eval(5);
        combine(
            y_new,
            y,
            h,
            &[
                (A71, &self.k[0]),
                (A73, &self.k[2]),
                (A74, &self.k[3]),
                (A75, &self.k[4]),
                (A76, &self.k[5]),
            ],
        );
        self.eval_at(y_new, 6);

        let mut acc = 0.0;
        let n = y.len() as f64;
        let k = &self.k;
        for (((((((y0, y1), k1), k3), k4), k5), k6), k7) in y
            .iter()
            .zip(y_new.iter())
            .zip(k[0].iter())
            .zip(k[2].iter())
            .zip(k[3].iter())
            .zip(k[4].iter())
            .zip(k[5].iter())
            .zip(k[6].iter())
        {
            let err = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;
            let scale = tol.atol + tol.rtol * y0.norm().max(y1.norm());
            acc += (err.norm() / scale).powi(2);
        }
        (acc / n).sqrt()
    }
}

/// Initial step size (Hairer, Nørsett & Wanner, II.4).
fn initial_step(stepper: &mut Stepper, y: &CMat, tol: &ToleranceSpec, horizon: f64) -> f64 {
    let scale = |v: &C64| tol.atol + tol.rtol * v.norm();
    let n = y.len() as f64;
    let rms = |m: &CMat| {
        (m.iter().zip(y.iter()).map(|(v, y0)| (v.norm() / scale(y0)).powi(2)).sum::<f64>() / n).sqrt()
    };
    let d0 = rms(y);
    let d1 = rms(&stepper.k[0]);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(horizon);
    combine(&mut stepper.stage, y, h0, &[(1.0, &stepper.k[0].clone())]);
    stepper.eval(1);
    let diff = &stepper.k[1] - &stepper.k[0];
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1).min(horizon)
}

struct Recorder<'a> {
    spec: &'a RecordSpec,
    record: TrajectoryRecord,
}

impl<'a> Recorder<'a> {
    fn new(spec: &'a RecordSpec, dim: usize) -> Self {
        Self {
            spec,
            record: TrajectoryRecord {
                times: Vec::new(),
                observables: spec.observables.iter().map(|(n, _)| (n.clone(), Vec::new())).collect(),
                purity: Vec::new(),
                fidelity: spec.target.as_ref().map(|_| Vec::new()),
                min_eigenvalues: Vec::new(),
                states: Vec::new(),
                final_state: CMat::zeros((dim, dim)),
                diagnostics: Diagnostics {
                    min_step: f64::INFINITY,
                    min_eigenvalue: f64::INFINITY,
                    ..Diagnostics::default()
                },
            },
        }
    }

    fn push(&mut self, t: f64, rho: &CMat) -> Result<()> {
        let r = &mut self.record;
        r.times.push(t);
        for ((_, op), (_, series)) in self.spec.observables.iter().zip(r.observables.iter_mut()) {
            series.push(op.expectation(rho).re);
        }
        r.purity.push(linalg::trace_product(rho, rho).re);
        if let (Some(target), Some(series)) = (&self.spec.target, r.fidelity.as_mut()) {
            series.push(fidelity(&QuantumState::mixed_unchecked(rho.clone()), target)?);
        }
        let dev = (linalg::trace(rho) - C64::from(1.0)).norm();
        r.diagnostics.max_trace_deviation = r.diagnostics.max_trace_deviation.max(dev);
        if self.spec.track_positivity {
            let min = linalg::eigvalsh(rho)?[0];
            r.min_eigenvalues.push(min);
            r.diagnostics.min_eigenvalue = r.diagnostics.min_eigenvalue.min(min);
            if min < -BREACH {
                return Err(Error::InvariantBreach {
                    t,
                    what: "minimum eigenvalue",
                    value: min,
                });
            }
        }
        if self.spec.store_states {
            r.states.push(rho.clone());
        }
        Ok(())
    }
}

/// Integrates `d rho / dt = L(rho)` from `rho0` up to `t_final`.
///
/// After every accepted step the state is replaced by its Hermitian part
/// and renormalized to unit trace; both corrections are logged and any
/// single correction above `1e-4`, or an accumulated trace correction above
/// `1e-6` per unit time, aborts the run.
pub fn integrate(
    model: &LindbladModel,
    rho0: &QuantumState,
    t_final: f64,
    tol: &ToleranceSpec,
    record: &RecordSpec,
) -> Result<TrajectoryRecord> {
    if rho0.dim() != model.dim() {
        return Err(Error::ShapeMismatch {
            expected: model.dim(),
            found: rho0.dim(),
        });
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "t_final",
            value: t_final,
            reason: "integration horizon must be finite and non-negative",
        });
    }
    if let Some(dt) = record.interval {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "record interval",
                value: dt,
                reason: "must be positive",
            });
        }
    }

    let mut y = rho0.density();
    let mut recorder = Recorder::new(record, model.dim());
    recorder.push(0.0, &y)?;
    if t_final == 0.0 {
        recorder.record.final_state = y;
        return Ok(recorder.record);
    }

    let stops: Vec<f64> = match record.interval {
        Some(dt) => {
            let n = (t_final / dt * (1.0 + 1e-12)).floor() as usize;
            let mut v: Vec<f64> = (1..=n).map(|k| k as f64 * dt).collect();
            if v.last().map_or(true, |&last| t_final - last > 1e-9 * dt) {
                v.push(t_final);
            } else if let Some(last) = v.last_mut() {
                *last = t_final;
            }
            v
        }
        None => vec![t_final],
    };

    let mut stepper = Stepper::new(model);
    stepper.eval_at(&y, 0);
    let mut h = initial_step(&mut stepper, &y, tol, t_final);
    if let Some(max) = tol.max_step {
        h = h.min(max);
    }
    let mut y_new = CMat::zeros(y.dim());
    let mut t = 0.0;
    let mut err_prev = 1e-4f64;
    let mut stop_idx = 0;
    let mut diag = std::mem::take(&mut recorder.record.diagnostics);

    while stop_idx < stops.len() {
        let stop = stops[stop_idx];
        let remaining = stop - t;
        let clipped = h >= remaining;
        let step = if clipped { remaining } else { h };
        if step < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StiffFailure { t, step });
        }
        if diag.accepted_steps + diag.rejected_steps >= tol.max_steps {
            return Err(Error::StiffFailure { t, step });
        }
        let err = stepper.step(&y, step, &mut y_new, tol);
        if !err.is_finite() {
            diag.rejected_steps += 1;
            h = step * 0.2;
            continue;
        }
        if err <= 1.0 {
            // Accepted: clean up invariants, log corrections.
            let herm = linalg::symmetrize_in_place(&mut y_new);
            let tr = linalg::trace(&y_new).re;
            let drift = (tr - 1.0).abs();
            y_new.mapv_inplace(|z| z / tr);
            t = if clipped { stop } else { t + step };
            diag.accepted_steps += 1;
            diag.min_step = diag.min_step.min(step);
            diag.max_step = diag.max_step.max(step);
            diag.max_trace_correction = diag.max_trace_correction.max(drift);
            diag.total_trace_correction += drift;
            diag.max_hermitian_correction = diag.max_hermitian_correction.max(herm);
            if herm > BREACH {
                return Err(Error::InvariantBreach {
                    t,
                    what: "hermiticity correction",
                    value: herm,
                });
            }
            if drift > BREACH {
                return Err(Error::InvariantBreach {
                    t,
                    what: "trace correction",
                    value: drift,
                });
            }
            if diag.total_trace_correction > DRIFT_PER_TIME * t + 1e-10 {
                return Err(Error::InvariantBreach {
                    t,
                    what: "accumulated trace correction",
                    value: diag.total_trace_correction,
                });
            }
            std::mem::swap(&mut y, &mut y_new);
            // First-same-as-last: the final stage is f at the new state.
            stepper.k.swap(0, 6);

            let factor = 0.9 * err.max(1e-10).powf(-0.17) * err_prev.powf(0.04);
            err_prev = err.max(1e-4);
            let proposal = step * factor.clamp(0.2, 10.0);
            // A step shortened to hit a recording time says nothing about
            // the natural step size.
            h = if clipped { proposal.max(h) } else { proposal };
            if let Some(max) = tol.max_step {
                h = h.min(max);
            }
            if clipped {
                recorder.push(t, &y)?;
                stop_idx += 1;
            }
        } else {
            diag.rejected_steps += 1;
            h = step * (0.9 * err.powf(-0.2)).max(0.2);
        }
    }

    diag.evaluations = stepper.evaluations;
    let min_eig = recorder.record.diagnostics.min_eigenvalue;
    let max_dev = recorder.record.diagnostics.max_trace_deviation;
    diag.min_eigenvalue = min_eig;
    diag.max_trace_deviation = max_dev;
    recorder.record.diagnostics = diag;
    recorder.record.final_state = y;
    Ok(recorder.record)
}
