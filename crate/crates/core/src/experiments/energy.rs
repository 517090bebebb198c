//! Certificate for the linear energy bound `L*(N) <= -lambda N + mu`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::fock::{InteriorProjector, Oscillator};
use crate::lindblad::{integrate, LindbladModel, RecordSpec, ToleranceSpec};
use crate::states::QuantumState;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergySpec {
    /// Interior fractions at which `mu` is evaluated; the last one is reported.
    pub cutoffs: Vec<f64>,
    /// Largest relative change of `mu` across cutoffs.
    pub stability: f64,
    /// Coherent amplitude of the trajectory check; `None` skips it.
    pub coherent_amplitude: Option<f64>,
    pub horizon: f64,
    pub record_interval: f64,
    /// Slack added to the trajectory bound.
    pub slack: f64,
    pub tolerance: ToleranceSpec,
}

impl Default for EnergySpec {
    fn default() -> Self {
        Self {
            cutoffs: vec![0.7, 0.8],
            stability: 0.01,
            coherent_amplitude: Some(4.0),
            horizon: 20.0,
            record_interval: 0.25,
            slack: 0.5,
            tolerance: ToleranceSpec::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyCertificate {
    pub dim: usize,
    pub epsilon: f64,
    pub eta: f64,
    pub r: f64,
    pub lambda: f64,
    pub mu: f64,
    pub mu_over_lambda: f64,
    /// `(cutoff, mu)` per interior size.
    pub mu_by_cutoff: Vec<(usize, f64)>,
    pub mu_relative_change: f64,
    /// Largest eigenvalue of the interior part of `-q sin(2 eta q) - |q|`.
    pub trig_bound_check: f64,
    pub trajectory: Option<EnergyTrajectory>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyTrajectory {
    pub initial_number: f64,
    pub bound: f64,
    pub max_number: f64,
    pub final_number: f64,
    pub times: Vec<f64>,
    pub number: Vec<f64>,
    pub within_bound: bool,
}

impl EnergyCertificate {
    pub fn passed(&self) -> bool {
        self.mu.is_finite() && self.trajectory.as_ref().is_none_or(|t| t.within_bound)
    }
}

/// `lambda = 2 r eps eta (1 - eps eta / 2)`.
pub fn energy_rate(epsilon: f64, eta: f64, r: f64) -> f64 {
    2.0 * r * epsilon * eta * (1.0 - epsilon * eta / 2.0)
}

pub fn certify_energy_bound(dim: usize, eta: f64, epsilon: f64, r: f64, spec: &EnergySpec) -> Result<EnergyCertificate> {
    check_positive("eta", eta)?;
    check_positive("epsilon", epsilon)?;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter {
            name: "r",
            value: r,
            reason: "must lie strictly between 0 and 1",
        });
    }
    if epsilon * eta >= 2.0 {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            value: epsilon,
            reason: "the bound needs epsilon < 2 / eta",
        });
    }
    if spec.cutoffs.is_empty() {
        return Err(Error::InvalidRequest("no interior cutoff given".into()));
    }
    let osc = Oscillator::new(dim)?;
    let (m1, m2) = osc.two_dissipators(eta, epsilon)?;
    let model = LindbladModel::new(vec![(m1, 1.0), (m2, 1.0)], None)?;
    let lambda = energy_rate(epsilon, eta, r);
    let g = &model.apply_adjoint(&osc.number)? + &osc.number.scale(C64::from(lambda));

    let mut mu_by_cutoff = Vec::with_capacity(spec.cutoffs.len());
    for &fraction in &spec.cutoffs {
        let proj = InteriorProjector::with_fraction(dim, fraction)?;
        mu_by_cutoff.push((proj.cutoff(), proj.max_eigenvalue(&g)?));
    }
    let mu = mu_by_cutoff.last().expect("non-empty").1;
    let (lo, hi) = mu_by_cutoff
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, m)| (lo.min(m), hi.max(m)));
    let mu_relative_change = (hi - lo) / mu.abs().max(f64::MIN_POSITIVE);
    if !mu.is_finite() || mu_relative_change > spec.stability {
        return Err(Error::CertificationFailure(format!(
            "interior maximum not stable under cutoff refinement: {mu_by_cutoff:?}"
        )));
    }

    let trig = osc.f_q(|x| -x * (2.0 * eta * x).sin() - x.abs());
    let trig_bound_check = InteriorProjector::default_for(dim)?.max_eigenvalue(&trig)?;

    let trajectory = match spec.coherent_amplitude {
        None => None,
        Some(alpha) => {
            let rho0 = QuantumState::coherent(dim, C64::from(alpha))?;
            let record = RecordSpec::every(spec.record_interval).observe("N", osc.number.clone());
            let run = integrate(&model, &rho0, spec.horizon, &spec.tolerance, &record)?;
            let number = run.series("N").expect("recorded").to_vec();
            let initial_number = number[0];
            let bound = initial_number.max(mu / lambda) + spec.slack;
            let max_number = number.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Some(EnergyTrajectory {
                initial_number,
                bound,
                max_number,
                final_number: *number.last().expect("non-empty"),
                times: run.times,
                within_bound: max_number <= bound,
                number,
            })
        }
    };

    Ok(EnergyCertificate {
        dim,
        epsilon,
        eta,
        r,
        lambda,
        mu,
        mu_over_lambda: mu / lambda,
        mu_by_cutoff,
        mu_relative_change,
        trig_bound_check,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rate_arithmetic() {
        let eta = PI.sqrt();
        let lambda = energy_rate(0.15, eta, 0.9);
        let x = 0.15 * eta;
        assert!((lambda - 0.9 * 2.0 * x * (1.0 - x / 2.0)).abs() < 1e-15);
        assert!((lambda - 0.4150).abs() < 1e-3);
    }

    #[test]
    fn certificate_without_trajectory() {
        let spec = EnergySpec {
            coherent_amplitude: None,
            ..EnergySpec::default()
        };
        let cert = certify_energy_bound(100, PI.sqrt(), 0.15, 0.9, &spec).unwrap();
        assert!(cert.mu.is_finite());
        assert!(cert.mu_relative_change <= 0.01);
        assert!(cert.trig_bound_check <= 1e-6);
        assert!(cert.passed());
    }

    #[test]
    fn rejects_inadmissible_inputs() {
        let spec = EnergySpec::default();
        assert!(certify_energy_bound(60, PI.sqrt(), 0.15, 1.0, &spec).is_err());
        assert!(certify_energy_bound(60, PI.sqrt(), 1.2, 0.5, &spec).is_err());
        let spec = EnergySpec {
            cutoffs: vec![],
            ..EnergySpec::default()
        };
        assert!(certify_energy_bound(60, PI.sqrt(), 0.15, 0.5, &spec).is_err());
    }
}
