//! Numerical studies built on the engine: stabilization from vacuum, energy
//! certificates, logical contrast decay and its scaling, the qunaught noise
//! study, and the comparison with the reduced spectral model.

pub mod crosscheck;
pub mod decay;
pub mod energy;
pub mod qunaught;
pub mod stabilization;
pub mod sweep;

pub use crosscheck::{cross_check_reduced_model, CrossCheckReport, CrossCheckSpec};
pub use decay::{run_contrast, run_contrast_decay, ContrastRun, DecayFit, DecaySpec};
pub use energy::{certify_energy_bound, EnergyCertificate, EnergySpec};
pub use qunaught::{qunaught_uniqueness, run_qunaught_noise_study, QunaughtPoint, QunaughtSpec, QunaughtStudy, Uniqueness};
pub use stabilization::{run_stabilization, StabilizationReport, StabilizationSpec};
pub use sweep::{fit_cells, run_scaling_sweep, SweepCell, SweepResult, SweepSpec};

use crate::error::Result;
use crate::fock::Oscillator;
use crate::lindblad::{LindbladModel, RecordSpec};
use crate::states::{GkpParams, LogicalFrame};

/// Two stabilizing dissipators at unit rate plus photon loss at `kappa`.
pub fn stabilizer_model(osc: &Oscillator, params: &GkpParams, kappa: f64) -> Result<LindbladModel> {
    LindbladModel::two_dissipator(osc, params, kappa)
}

/// Records `N`, and `Z`, `X`, `Y` when the lattice carries a qubit.
pub fn standard_record(osc: &Oscillator, params: &GkpParams, interval: f64) -> Result<RecordSpec> {
    let mut spec = RecordSpec::every(interval).observe("N", osc.number.clone());
    if params.d == 2 {
        let frame = LogicalFrame::from_oscillator(osc, params)?;
        spec = spec.observe("Z", frame.z).observe("X", frame.x).observe("Y", frame.y);
    }
    Ok(spec)
}
