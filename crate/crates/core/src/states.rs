//! Finite-energy GKP codewords, logical states and observables, fidelities.

use std::f64::consts::PI;

use ndarray::Array1;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::fock::{FockOperator, Oscillator, Spectrum};
use crate::hermite;
use crate::linalg::{self, CMat, Op};

/// Largest dropped Fock weight accepted for a codeword.
pub const TAIL_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GkpParams {
    /// 1 for the qunaught, 2 for the qubit.
    pub d: u32,
    pub eta: f64,
    pub eta_square: f64,
    pub epsilon: f64,
}

impl GkpParams {
    /// Square lattice with `eta^2 = pi d / 2`.
    pub fn new(d: u32, epsilon: f64) -> Result<Self> {
        if !(d == 1 || d == 2) {
            return Err(Error::InvalidParameter {
                name: "d",
                value: d as f64,
                reason: "lattice dimension must be 1 or 2",
            });
        }
        let eta = (PI * d as f64 / 2.0).sqrt();
        Self::with_eta(d, eta, epsilon)
    }

    /// Explicit `eta`, for runs away from the stabilizing values.
    pub fn with_eta(d: u32, eta: f64, epsilon: f64) -> Result<Self> {
        if !(d == 1 || d == 2) {
            return Err(Error::InvalidParameter {
                name: "d",
                value: d as f64,
                reason: "lattice dimension must be 1 or 2",
            });
        }
        check_positive("eta", eta)?;
        check_positive("epsilon", epsilon)?;
        Ok(Self {
            d,
            eta,
            eta_square: 2.0 * eta,
            epsilon,
        })
    }

    pub fn qubit(epsilon: f64) -> Result<Self> {
        Self::new(2, epsilon)
    }

    pub fn qunaught(epsilon: f64) -> Result<Self> {
        Self::new(1, epsilon)
    }

    /// Same lattice, different regularization.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::with_eta(self.d, self.eta, epsilon)
    }

    /// Distance between neighbouring peaks of one codeword, `2 pi d / eta_square`.
    pub fn peak_spacing(&self) -> f64 {
        2.0 * PI * self.d as f64 / self.eta_square
    }
}

/// Pure state vector or density matrix on the truncated space.
#[derive(Clone, Debug)]
pub enum QuantumState {
    Pure(Array1<C64>),
    Mixed(CMat),
}

impl QuantumState {
    pub fn pure(psi: Array1<C64>) -> Result<Self> {
        let norm = linalg::norm(&psi);
        if psi.is_empty() || (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("state norm {norm} is not 1")));
        }
        Ok(Self::Pure(psi))
    }

    /// Normalizes before wrapping.
    pub fn pure_normalized(psi: Array1<C64>) -> Result<Self> {
        let norm = linalg::norm(&psi);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(Self::Pure(psi / C64::from(norm)))
    }

    pub fn mixed(rho: CMat) -> Result<Self> {
        validate_density(&rho)?;
        Ok(Self::Mixed(rho))
    }

    /// Wraps a density matrix without the eigenvalue check; used for
    /// integrator output, which is validated through its own diagnostics.
    pub(crate) fn mixed_unchecked(rho: CMat) -> Self {
        Self::Mixed(rho)
    }

    pub fn fock(dim: usize, n: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::InvalidDimension { dim, min: n + 1 });
        }
        let mut psi = Array1::zeros(dim);
        psi[n] = C64::from(1.0);
        Ok(Self::Pure(psi))
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        Self::fock(dim, 0)
    }

    /// Coherent state `|alpha>`; the truncated tail must carry at most
    /// [`TAIL_THRESHOLD`] of the weight.
    pub fn coherent(dim: usize, alpha: C64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension { dim, min: 1 });
        }
        let mut psi = Array1::zeros(dim);
        let mut coeff = C64::from((-0.5 * alpha.norm_sqr()).exp());
        let mut kept = 0.0;
        for n in 0..dim {
            if n > 0 {
                coeff *= alpha / (n as f64).sqrt();
            }
            psi[n] = coeff;
            kept += coeff.norm_sqr();
        }
        let tail = (1.0 - kept).max(0.0);
        if tail > TAIL_THRESHOLD {
            return Err(Error::Truncation {
                dim,
                tail_weight: tail,
                threshold: TAIL_THRESHOLD,
            });
        }
        Self::pure_normalized(psi)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Pure(v) => v.len(),
            Self::Mixed(m) => m.nrows(),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, Self::Pure(_))
    }

    pub fn density(&self) -> CMat {
        match self {
            Self::Pure(v) => {
                let n = v.len();
                CMat::from_shape_fn((n, n), |(i, j)| v[i] * v[j].conj())
            }
            Self::Mixed(m) => m.clone(),
        }
    }

    pub fn expectation(&self, op: &FockOperator) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(Error::ShapeMismatch {
                expected: self.dim(),
                found: op.dim(),
            });
        }
        Ok(match self {
            Self::Pure(v) => op.expectation_pure(v),
            Self::Mixed(m) => op.expectation(m),
        })
    }

    pub fn purity(&self) -> f64 {
        match self {
            Self::Pure(_) => 1.0,
            Self::Mixed(m) => linalg::trace_product(m, m).re,
        }
    }
}

fn validate_density(rho: &CMat) -> Result<()> {
    let (r, c) = rho.dim();
    if r == 0 || r != c {
        return Err(Error::InvalidState(format!("density matrix must be square, got {r}x{c}")));
    }
    let tr = linalg::trace(rho);
    if (tr - C64::from(1.0)).norm() > 1e-8 {
        return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
    }
    let herm = linalg::hermiticity_residual(&rho.view());
    if herm > 1e-10 {
        return Err(Error::InvalidState(format!("not Hermitian (residual {herm:.3e})")));
    }
    let min = linalg::eigvalsh(&linalg::hermitian_part(rho))?[0];
    if min < -1e-8 {
        return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
    }
    Ok(())
}

/// Fock coefficients of the regularized comb `E_eps |psi_k>` in `dim` levels,
/// not normalized.
fn raw_codeword(dim: usize, params: &GkpParams, k: u32) -> Array1<f64> {
    let radius = hermite::support_radius(dim) + 4.0;
    let spacing = 2.0 * PI / params.eta_square;
    let d = params.d as i64;
    let m_max = (radius / (spacing * params.d as f64)).ceil() as i64 + 1;
    let mut sum = Array1::<f64>::zeros(dim);
    for m in -m_max..=m_max {
        let x = (m * d + k as i64) as f64 * spacing;
        if x.abs() <= radius {
            sum += &hermite::hermite_functions(dim, x);
        }
    }
    for (n, c) in sum.iter_mut().enumerate() {
        *c *= (-params.epsilon * (n as f64 + 0.5)).exp();
    }
    sum
}

/// Finite-energy codeword `|psi_{k,eps}>`.
///
/// The comb is built in a doubled truncation to measure how much weight the
/// requested `dim` drops; more than [`TAIL_THRESHOLD`] is an error.
pub fn build_codeword(dim: usize, params: &GkpParams, k: u32) -> Result<QuantumState> {
    if dim < 2 {
        return Err(Error::InvalidDimension { dim, min: 2 });
    }
    if k >= params.d {
        return Err(Error::InvalidRequest(format!(
            "codeword index {k} out of range for d = {}",
            params.d
        )));
    }
    let ext = raw_codeword(2 * dim, params, k);
    let total: f64 = ext.iter().map(|c| c * c).sum();
    let tail: f64 = ext.iter().skip(dim).map(|c| c * c).sum::<f64>() / total;
    if tail > TAIL_THRESHOLD {
        return Err(Error::Truncation {
            dim,
            tail_weight: tail,
            threshold: TAIL_THRESHOLD,
        });
    }
    let head = raw_codeword(dim, params, k).mapv(C64::from);
    QuantumState::pure_normalized(head)
}

/// Multiplies a pure state by `exp(-eps (N + 1/2))` and renormalizes.
pub fn apply_regularizer(state: &QuantumState, epsilon: f64) -> Result<QuantumState> {
    match state {
        QuantumState::Pure(v) => {
            let scaled = Array1::from_iter(
                v.iter()
                    .enumerate()
                    .map(|(n, c)| c * (-epsilon * (n as f64 + 0.5)).exp()),
            );
            QuantumState::pure_normalized(scaled)
        }
        QuantumState::Mixed(_) => Err(Error::Unsupported("regularizer on mixed states")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LogicalLabel {
    PlusZ,
    MinusZ,
    PlusX,
    MinusX,
    PlusY,
    MinusY,
    Magic,
}

impl LogicalLabel {
    pub const ALL: [LogicalLabel; 7] = [
        Self::PlusZ,
        Self::MinusZ,
        Self::PlusX,
        Self::MinusX,
        Self::PlusY,
        Self::MinusY,
        Self::Magic,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::PlusZ => "+Z",
            Self::MinusZ => "-Z",
            Self::PlusX => "+X",
            Self::MinusX => "-X",
            Self::PlusY => "+Y",
            Self::MinusY => "-Y",
            Self::Magic => "magic",
        }
    }
}

/// Normalized combination of the two codewords for the given label. For the
/// qunaught only `PlusZ` (its single codeword) is meaningful.
pub fn build_logical_state(dim: usize, params: &GkpParams, label: LogicalLabel) -> Result<QuantumState> {
    if params.d == 1 {
        return match label {
            LogicalLabel::PlusZ => build_codeword(dim, params, 0),
            other => Err(Error::InvalidRequest(format!(
                "the qunaught has a single codeword; label {} is undefined",
                other.name()
            ))),
        };
    }
    let zero = codeword_vector(dim, params, 0)?;
    let one = codeword_vector(dim, params, 1)?;
    let (a, b) = match label {
        LogicalLabel::PlusZ => return QuantumState::pure(zero),
        LogicalLabel::MinusZ => return QuantumState::pure(one),
        LogicalLabel::PlusX => (C64::from(1.0), C64::from(1.0)),
        LogicalLabel::MinusX => (C64::from(1.0), C64::from(-1.0)),
        LogicalLabel::PlusY => (C64::from(1.0), C64::new(0.0, 1.0)),
        LogicalLabel::MinusY => (C64::from(1.0), C64::new(0.0, -1.0)),
        LogicalLabel::Magic => (C64::from((PI / 8.0).cos()), C64::from((PI / 8.0).sin())),
    };
    QuantumState::pure_normalized(zero * a + one * b)
}

fn codeword_vector(dim: usize, params: &GkpParams, k: u32) -> Result<Array1<C64>> {
    match build_codeword(dim, params, k)? {
        QuantumState::Pure(v) => Ok(v),
        QuantumState::Mixed(_) => unreachable!("codewords are pure"),
    }
}

/// `+1`, `-1`, or `0` at an exact zero.
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Logical Pauli observables of the square qubit lattice.
#[derive(Clone, Debug)]
pub struct LogicalFrame {
    pub z: FockOperator,
    pub x: FockOperator,
    pub y: FockOperator,
    /// Largest entry of the anti-Hermitian part removed from `-i Z X`.
    pub y_residue: f64,
}

impl LogicalFrame {
    pub fn from_oscillator(osc: &Oscillator, params: &GkpParams) -> Result<Self> {
        if params.d != 2 {
            return Err(Error::InvalidRequest("logical frame requires d = 2".into()));
        }
        let eta = params.eta;
        let z = osc.f_q(|x| sign((eta * x).cos()));
        let x = osc.f_p(|x| sign((eta * x).cos()));
        let mut y = linalg::gemm(z.entries(), Op::None, x.entries(), Op::None).mapv(|v| v * C64::new(0.0, -1.0));
        let y_residue = linalg::symmetrize_in_place(&mut y);
        Ok(Self {
            z,
            x,
            y: FockOperator::hermitian(y)?,
            y_residue,
        })
    }

    pub fn get(&self, axis: Axis) -> &FockOperator {
        match axis {
            Axis::Z => &self.z,
            Axis::X => &self.x,
            Axis::Y => &self.y,
        }
    }
}

pub fn build_logical_frame(dim: usize, params: &GkpParams) -> Result<LogicalFrame> {
    LogicalFrame::from_oscillator(&Oscillator::new(dim)?, params)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    Z,
    X,
    Y,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Z, Axis::X, Axis::Y];

    pub fn eigenstates(&self) -> (LogicalLabel, LogicalLabel) {
        match self {
            Axis::Z => (LogicalLabel::PlusZ, LogicalLabel::MinusZ),
            Axis::X => (LogicalLabel::PlusX, LogicalLabel::MinusX),
            Axis::Y => (LogicalLabel::PlusY, LogicalLabel::MinusY),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Axis::Z => "Z",
            Axis::X => "X",
            Axis::Y => "Y",
        }
    }
}

/// `<target| rho |target>` against a pure target.
pub fn fidelity(rho: &QuantumState, target: &QuantumState) -> Result<f64> {
    let psi = match target {
        QuantumState::Pure(v) => v,
        QuantumState::Mixed(_) => return Err(Error::Unsupported("fidelity against a mixed target")),
    };
    if rho.dim() != psi.len() {
        return Err(Error::ShapeMismatch {
            expected: psi.len(),
            found: rho.dim(),
        });
    }
    let f = match rho {
        QuantumState::Pure(v) => linalg::inner(psi, v).norm_sqr(),
        QuantumState::Mixed(m) => linalg::inner(psi, &m.dot(psi)).re,
    };
    Ok(f.clamp(0.0, 1.0))
}

/// Uhlmann fidelity `(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2` between two
/// arbitrary states.
pub fn uhlmann_fidelity(rho: &QuantumState, sigma: &QuantumState) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::ShapeMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    if let QuantumState::Pure(_) = sigma {
        return fidelity(rho, sigma);
    }
    if let QuantumState::Pure(_) = rho {
        return fidelity(sigma, rho);
    }
    let root = Spectrum::of(&FockOperator::hermitian(linalg::hermitian_part(&rho.density()))?)?
        .apply(|x| x.max(0.0).sqrt());
    let inner = linalg::matmul(&linalg::matmul(root.entries(), &sigma.density()), root.entries());
    let values = linalg::eigvalsh(&linalg::hermitian_part(&inner))?;
    let tr: f64 = values.iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

/// Position-space wavefunction of a pure state at the given points.
pub fn wavefunction(psi: &Array1<C64>, xs: &[f64]) -> Array1<C64> {
    let basis = hermite::hermite_matrix(psi.len(), xs);
    Array1::from_iter((0..xs.len()).map(|j| {
        psi.iter()
            .zip(basis.column(j).iter())
            .map(|(c, phi)| c * phi)
            .sum::<C64>()
    }))
}

/// Diagonal `rho(x, x)` of any state on a position grid.
pub fn position_density(state: &QuantumState, xs: &[f64]) -> Array1<f64> {
    match state {
        QuantumState::Pure(v) => wavefunction(v, xs).mapv(|z| z.norm_sqr()),
        QuantumState::Mixed(m) => {
            let basis = hermite::hermite_matrix(m.nrows(), xs).mapv(C64::from);
            let rb = m.dot(&basis);
            Array1::from_iter((0..xs.len()).map(|j| {
                basis
                    .column(j)
                    .iter()
                    .zip(rb.column(j).iter())
                    .map(|(b, r)| b * r)
                    .sum::<C64>()
                    .re
            }))
        }
    }
}

/// Positions of local maxima in a sampled profile whose height reaches
/// `min_fraction` of the global maximum, refined by parabolic interpolation.
pub fn local_maxima(xs: &[f64], ys: &[f64], min_fraction: f64) -> Vec<f64> {
    let top = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut peaks = Vec::new();
    for j in 1..ys.len().saturating_sub(1) {
        if ys[j] > ys[j - 1] && ys[j] >= ys[j + 1] && ys[j] >= min_fraction * top {
            let (a, b, c) = (ys[j - 1], ys[j], ys[j + 1]);
            let denom = a - 2.0 * b + c;
            let shift = if denom.abs() > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
            peaks.push(xs[j] + shift * (xs[j + 1] - xs[j]));
        }
    }
    peaks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|j| a + (b - a) * j as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn params_from_lattice_dimension() {
        let q = GkpParams::qubit(0.15).unwrap();
        assert!((q.eta * q.eta - PI).abs() < 1e-12);
        assert!((q.eta_square - 2.0 * PI.sqrt()).abs() < 1e-12);
        let n = GkpParams::qunaught(0.15).unwrap();
        assert!((n.eta * n.eta - PI / 2.0).abs() < 1e-12);
        assert!(GkpParams::new(3, 0.1).is_err());
        assert!(GkpParams::qubit(0.0).is_err());
    }

    #[test]
    fn qubit_codeword_peaks_on_even_lattice() {
        let params = GkpParams::qubit(0.15).unwrap();
        let state = build_codeword(100, &params, 0).unwrap();
        let xs = linspace(-12.0, 12.0, 4801);
        let dens = position_density(&state, &xs);
        let peaks = local_maxima(&xs, dens.as_slice().unwrap(), 0.1);
        assert!(peaks.len() >= 3);
        let spacing = 2.0 * PI.sqrt();
        for x in peaks {
            let nearest = (x / spacing).round() * spacing;
            assert!((x - nearest).abs() <= 0.05, "peak at {x}");
        }
    }

    #[test]
    fn odd_codeword_peaks_shifted() {
        let params = GkpParams::qubit(0.15).unwrap();
        let state = build_codeword(100, &params, 1).unwrap();
        let xs = linspace(-12.0, 12.0, 4801);
        let dens = position_density(&state, &xs);
        let spacing = 2.0 * PI.sqrt();
        for x in local_maxima(&xs, dens.as_slice().unwrap(), 0.1) {
            let shifted = x - PI.sqrt();
            let nearest = (shifted / spacing).round() * spacing;
            assert!((shifted - nearest).abs() <= 0.05, "peak at {x}");
        }
    }

    #[test]
    fn qunaught_peak_spacing() {
        let params = GkpParams::qunaught(0.15).unwrap();
        assert!((params.peak_spacing() - (2.0 * PI).sqrt()).abs() < 1e-12);
        let state = build_codeword(100, &params, 0).unwrap();
        let xs = linspace(-10.0, 10.0, 4001);
        let dens = position_density(&state, &xs);
        let peaks = local_maxima(&xs, dens.as_slice().unwrap(), 0.1);
        let gaps: Vec<f64> = peaks.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(!gaps.is_empty());
        for g in gaps {
            assert!((g - (2.0 * PI).sqrt()).abs() < 0.05, "gap {g}");
        }
    }

    #[test]
    fn mean_photon_number_falls_with_epsilon() {
        let osc = Oscillator::new(120).unwrap();
        let n = |eps: f64| {
            let s = build_codeword(120, &GkpParams::qubit(eps).unwrap(), 0).unwrap();
            s.expectation(&osc.number).unwrap().re
        };
        let (n15, n30) = (n(0.15), n(0.3));
        assert!(n15.is_finite() && n30 < n15);
    }

    #[test]
    fn truncation_is_detected() {
        let params = GkpParams::qubit(0.05).unwrap();
        match build_codeword(60, &params, 0) {
            Err(Error::Truncation { tail_weight, .. }) => assert!(tail_weight > TAIL_THRESHOLD),
            other => panic!("expected truncation error, got {other:?}"),
        }
        assert!(build_codeword(120, &GkpParams::qubit(0.1).unwrap(), 0).is_ok());
    }

    #[test]
    fn regularizer_with_zero_epsilon_is_identity() {
        let params = GkpParams::qubit(0.2).unwrap();
        let QuantumState::Pure(v) = build_codeword(80, &params, 1).unwrap() else { unreachable!() };
        let QuantumState::Pure(w) = apply_regularizer(&QuantumState::Pure(v.clone()), 0.0).unwrap() else {
            unreachable!()
        };
        let diff = v.iter().zip(w.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-15);
    }

    #[test]
    fn codewords_nearly_orthogonal() {
        let params = GkpParams::qubit(0.15).unwrap();
        let QuantumState::Pure(a) = build_codeword(100, &params, 0).unwrap() else { unreachable!() };
        let QuantumState::Pure(b) = build_codeword(100, &params, 1).unwrap() else { unreachable!() };
        assert!(linalg::inner(&a, &b).norm() <= 0.05);
    }

    #[test]
    fn logical_coordinates_of_eigenstates() {
        let dim = 100;
        let params = GkpParams::qubit(0.15).unwrap();
        let frame = build_logical_frame(dim, &params).unwrap();
        let ev = |label, op: &FockOperator| {
            build_logical_state(dim, &params, label).unwrap().expectation(op).unwrap().re
        };
        assert!(ev(LogicalLabel::PlusZ, &frame.z) >= 0.9);
        assert!(ev(LogicalLabel::MinusZ, &frame.z) <= -0.9);
        assert!(ev(LogicalLabel::PlusX, &frame.x) >= 0.9);
        assert!(ev(LogicalLabel::MinusX, &frame.x) <= -0.9);
        assert!(ev(LogicalLabel::PlusY, &frame.y) >= 0.8);
        assert!(ev(LogicalLabel::PlusZ, &frame.x).abs() <= 0.1);
        assert!(ev(LogicalLabel::PlusX, &frame.z).abs() <= 0.1);
    }

    #[test]
    fn magic_state_composition() {
        let dim = 100;
        let params = GkpParams::qubit(0.15).unwrap();
        let QuantumState::Pure(zero) = build_codeword(dim, &params, 0).unwrap() else { unreachable!() };
        let QuantumState::Pure(one) = build_codeword(dim, &params, 1).unwrap() else { unreachable!() };
        let QuantumState::Pure(m) = build_logical_state(dim, &params, LogicalLabel::Magic).unwrap() else {
            unreachable!()
        };
        let raw = zero * C64::from((PI / 8.0).cos()) + one * C64::from((PI / 8.0).sin());
        let raw = &raw / C64::from(linalg::norm(&raw));
        let diff = raw.iter().zip(m.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-14);
    }

    #[test]
    fn qunaught_rejects_logical_labels() {
        let params = GkpParams::qunaught(0.15).unwrap();
        assert!(build_logical_state(100, &params, LogicalLabel::PlusZ).is_ok());
        assert!(matches!(
            build_logical_state(100, &params, LogicalLabel::PlusX),
            Err(Error::InvalidRequest(_))
        ));
        assert!(build_logical_frame(40, &params).is_err());
    }

    #[test]
    fn frame_is_involutive_on_interior() {
        let dim = 80;
        let params = GkpParams::qubit(0.15).unwrap();
        let frame = build_logical_frame(dim, &params).unwrap();
        let proj = crate::fock::InteriorProjector::default_for(dim).unwrap();
        let id = FockOperator::identity(dim);
        assert!(proj.max_abs_diff((&frame.z * &frame.z).entries(), id.entries()) <= 1e-8);
        assert!(proj.max_abs_diff((&frame.x * &frame.x).entries(), id.entries()) <= 1e-8);
        assert!(frame.y.is_hermitian());
        assert!(frame.y_residue.is_finite());
        let osc = Oscillator::new(dim).unwrap();
        let zq = osc.q_spectrum.vectors.clone();
        let zd = linalg::gemm(&zq, Op::Adjoint, &linalg::matmul(frame.z.entries(), &zq), Op::None);
        for i in 0..dim {
            let v = zd[[i, i]].re;
            assert!((v.abs() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn fidelity_basics() {
        let dim = 60;
        let params = GkpParams::qubit(0.2).unwrap();
        let cw = build_codeword(dim, &params, 0).unwrap();
        assert!((fidelity(&cw, &cw).unwrap() - 1.0).abs() < 1e-10);
        let mixed = QuantumState::mixed(cw.density()).unwrap();
        assert!((fidelity(&mixed, &cw).unwrap() - 1.0).abs() < 1e-10);
        let vac = QuantumState::mixed(QuantumState::vacuum(dim).unwrap().density()).unwrap();
        let f = fidelity(&vac, &cw).unwrap();
        assert!(f > 0.0 && f < 1.0);
        assert!(matches!(fidelity(&vac, &mixed), Err(Error::Unsupported(_))));
    }

    #[test]
    fn uhlmann_matches_pure_case_and_is_symmetric() {
        let dim = 20;
        let a = QuantumState::coherent(dim, C64::new(0.8, 0.3)).unwrap();
        let b = QuantumState::coherent(dim, C64::new(0.2, -0.5)).unwrap();
        let rho = QuantumState::mixed(a.density() * C64::from(0.7) + b.density() * C64::from(0.3)).unwrap();
        let sigma = QuantumState::mixed(a.density() * C64::from(0.4) + b.density() * C64::from(0.6)).unwrap();
        let f1 = uhlmann_fidelity(&rho, &sigma).unwrap();
        let f2 = uhlmann_fidelity(&sigma, &rho).unwrap();
        assert!((f1 - f2).abs() < 1e-8);
        assert!(f1 < 1.0 && f1 > 0.5);
        assert!((uhlmann_fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-8);
        let pure = QuantumState::mixed(a.density()).unwrap();
        let expected = fidelity(&rho, &a).unwrap();
        assert!((uhlmann_fidelity(&rho, &pure).unwrap() - expected).abs() < 1e-6);
    }

    #[test]
    fn coherent_state_checks() {
        let s = QuantumState::coherent(40, C64::from(2.0)).unwrap();
        let osc = Oscillator::new(40).unwrap();
        assert!((s.expectation(&osc.number).unwrap().re - 4.0).abs() < 1e-9);
        assert!(matches!(
            QuantumState::coherent(10, C64::from(4.0)),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn mixed_validation() {
        let mut rho = QuantumState::vacuum(4).unwrap().density();
        assert!(QuantumState::mixed(rho.clone()).is_ok());
        rho[[0, 0]] = C64::from(1.1);
        assert!(QuantumState::mixed(rho.clone()).is_err());
        rho[[0, 0]] = C64::from(1.5);
        rho[[1, 1]] = C64::from(-0.5);
        assert!(QuantumState::mixed(rho).is_err());
        assert!(QuantumState::pure(Array1::from_elem(3, C64::from(1.0))).is_err());
    }
}
