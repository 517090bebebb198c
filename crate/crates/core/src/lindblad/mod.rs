//! Lindblad generators in the Schrödinger and Heisenberg pictures.
//!
//! The generator is applied matrix-free as
//! `L(rho) = G rho + rho G^dagger + sum_k r_k L_k rho L_k^dagger` with
//! `G = -iH - K/2` and `K = sum_k r_k L_k^dagger L_k`, so no `dim^2 x dim^2`
//! superoperator is ever assembled. Photon loss is handled through the sparse
//! structure of `a`.

mod integrate;
mod steady;

pub use integrate::{integrate, Diagnostics, RecordSpec, ToleranceSpec, TrajectoryRecord};
pub use steady::{steady_state, SteadySpec, SteadyState};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{FockOperator, Oscillator};
use crate::linalg::{self, CMat, Op, ONE};
use crate::states::GkpParams;

/// One dissipation channel `rate * D[op]`.
#[derive(Clone, Debug)]
pub struct Jump {
    pub op: FockOperator,
    pub rate: f64,
    /// Set when `op` is the annihilation operator, enabling the sparse path.
    ladder: bool,
}

#[derive(Clone, Debug)]
pub struct LindbladModel {
    dim: usize,
    jumps: Vec<Jump>,
    hamiltonian: Option<FockOperator>,
    /// `-iH - K/2`
    drift: CMat,
    /// `sqrt(rate) * op` for the dense jumps.
    scaled: Vec<CMat>,
    loss_rate: f64,
}

impl LindbladModel {
    /// Model from explicit jump operators and rates.
    pub fn new(jumps: Vec<(FockOperator, f64)>, hamiltonian: Option<FockOperator>) -> Result<Self> {
        let dim = jumps
            .first()
            .map(|(op, _)| op.dim())
            .or_else(|| hamiltonian.as_ref().map(FockOperator::dim))
            .ok_or_else(|| Error::InvalidRequest("model needs at least one jump or a Hamiltonian".into()))?;
        let mut list = Vec::with_capacity(jumps.len());
        for (op, rate) in jumps {
            list.push(Jump {
                op,
                rate,
                ladder: false,
            });
        }
        Self::assemble(dim, list, hamiltonian)
    }

    /// The two-dissipator stabilizer, optionally with photon loss.
    pub fn two_dissipator(osc: &Oscillator, params: &GkpParams, kappa: f64) -> Result<Self> {
        let (m1, m2) = osc.two_dissipators(params.eta, params.epsilon)?;
        Self::new(vec![(m1, 1.0), (m2, 1.0)], None)?.with_photon_loss(osc, kappa)
    }

    /// The four-dissipator baseline at lattice constant `eta_square`.
    pub fn four_dissipator(osc: &Oscillator, params: &GkpParams, kappa: f64) -> Result<Self> {
        let ls = osc.four_dissipators(params.eta_square, params.epsilon)?;
        Self::new(ls.into_iter().map(|l| (l, 1.0)).collect(), None)?.with_photon_loss(osc, kappa)
    }

    /// Pure photon loss at rate `kappa`.
    pub fn photon_loss(osc: &Oscillator, kappa: f64) -> Result<Self> {
        let jump = Jump {
            op: osc.a.clone(),
            rate: kappa,
            ladder: true,
        };
        Self::assemble(osc.dim(), vec![jump], None)
    }

    /// Adds `kappa D[a]`; `kappa = 0` leaves the model unchanged.
    pub fn with_photon_loss(self, osc: &Oscillator, kappa: f64) -> Result<Self> {
        if kappa == 0.0 {
            return Ok(self);
        }
        let mut jumps = self.jumps;
        jumps.push(Jump {
            op: osc.a.clone(),
            rate: kappa,
            ladder: true,
        });
        Self::assemble(self.dim, jumps, self.hamiltonian)
    }

    fn assemble(dim: usize, jumps: Vec<Jump>, hamiltonian: Option<FockOperator>) -> Result<Self> {
        for j in &jumps {
            if j.op.dim() != dim {
                return Err(Error::ShapeMismatch {
                    expected: dim,
                    found: j.op.dim(),
                });
            }
            if !(j.rate >= 0.0 && j.rate.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "rate",
                    value: j.rate,
                    reason: "jump rates must be finite and non-negative",
                });
            }
        }
        if let Some(h) = &hamiltonian {
            if h.dim() != dim {
                return Err(Error::ShapeMismatch {
                    expected: dim,
                    found: h.dim(),
                });
            }
            if !h.is_hermitian() {
                return Err(Error::NotHermitian {
                    residual: h.hermiticity_residual(),
                });
            }
        }

        let mut k = CMat::zeros((dim, dim));
        let mut scaled = Vec::new();
        let mut loss_rate = 0.0;
        for j in &jumps {
            if j.ladder {
                loss_rate += j.rate;
                // a^dagger a is exactly diag(0, 1, ..., dim-1) in the truncation.
                for n in 0..dim {
                    k[[n, n]] += C64::from(j.rate * n as f64);
                }
            } else if j.rate > 0.0 {
                linalg::gemm_into(C64::from(j.rate), j.op.entries(), Op::Adjoint, j.op.entries(), Op::None, ONE, &mut k);
                scaled.push(j.op.entries().mapv(|z| z * j.rate.sqrt()));
            }
        }
        let mut drift = k.mapv(|z| z * -0.5);
        if let Some(h) = &hamiltonian {
            drift = drift - h.entries().mapv(|z| z * C64::new(0.0, 1.0));
        }
        Ok(Self {
            dim,
            jumps,
            hamiltonian,
            drift,
            scaled,
            loss_rate,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn hamiltonian(&self) -> Option<&FockOperator> {
        self.hamiltonian.as_ref()
    }

    fn check(&self, n: usize) -> Result<()> {
        if n == self.dim {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: self.dim,
                found: n,
            })
        }
    }

    /// `L(rho)`, allocated.
    pub fn apply_generator(&self, rho: &CMat) -> Result<CMat> {
        self.check(rho.nrows())?;
        let mut out = CMat::zeros((self.dim, self.dim));
        let mut work = CMat::zeros((self.dim, self.dim));
        self.generator_into(rho, &mut out, &mut work);
        Ok(out)
    }

    /// `out <- L(rho)` using `work` as scratch. `rho` must be Hermitian.
    pub(crate) fn generator_into(&self, rho: &CMat, out: &mut CMat, work: &mut CMat) {
        let n = self.dim;
        linalg::gemm_into(ONE, &self.drift, Op::None, rho, Op::None, linalg::ZERO, work);
        // G rho + (G rho)^dagger
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] = work[[i, j]] + work[[j, i]].conj();
            }
        }
        for l in &self.scaled {
            linalg::gemm_into(ONE, l, Op::None, rho, Op::None, linalg::ZERO, work);
            linalg::gemm_into(ONE, work, Op::None, l, Op::Adjoint, ONE, out);
        }
        if self.loss_rate > 0.0 {
            // (a rho a^dagger)_ij = sqrt((i+1)(j+1)) rho_{i+1, j+1}
            for i in 0..n - 1 {
                let si = ((i + 1) as f64).sqrt();
                for j in 0..n - 1 {
                    let sj = ((j + 1) as f64).sqrt();
                    out[[i, j]] += rho[[i + 1, j + 1]] * (self.loss_rate * si * sj);
                }
            }
        }
    }

    /// Heisenberg-picture generator `L*(O)` for Hermitian `O`.
    pub fn apply_adjoint(&self, o: &FockOperator) -> Result<FockOperator> {
        self.check(o.dim())?;
        if !o.is_hermitian() {
            return Err(Error::NotHermitian {
                residual: o.hermiticity_residual(),
            });
        }
        let n = self.dim;
        let oe = o.entries();
        // G^dagger O + O G = i[H, O] - {K, O}/2
        let go = linalg::gemm(&self.drift, Op::Adjoint, oe, Op::None);
        let mut out = CMat::from_shape_fn((n, n), |(i, j)| go[[i, j]] + go[[j, i]].conj());
        let mut work = CMat::zeros((n, n));
        for l in &self.scaled {
            linalg::gemm_into(ONE, l, Op::Adjoint, oe, Op::None, linalg::ZERO, &mut work);
            linalg::gemm_into(ONE, &work, Op::None, l, Op::None, ONE, &mut out);
        }
        if self.loss_rate > 0.0 {
            // (a^dagger O a)_ij = sqrt(i j) O_{i-1, j-1}
            for i in 1..n {
                for j in 1..n {
                    out[[i, j]] += oe[[i - 1, j - 1]] * (self.loss_rate * ((i * j) as f64).sqrt());
                }
            }
        }
        linalg::symmetrize_in_place(&mut out);
        FockOperator::hermitian(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{channel_adjoint_term, InteriorProjector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_density(dim: usize, rng: &mut impl Rng) -> CMat {
        let a = CMat::from_shape_fn((dim, dim), |_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let rho = linalg::gemm(&a, Op::None, &a, Op::Adjoint);
        let tr = linalg::trace(&rho);
        rho.mapv(|z| z / tr)
    }

    fn random_hermitian(dim: usize, rng: &mut impl Rng) -> FockOperator {
        let a = CMat::from_shape_fn((dim, dim), |_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        FockOperator::hermitian(linalg::hermitian_part(&a)).unwrap()
    }

    fn stabilizer(dim: usize, kappa: f64) -> (Oscillator, LindbladModel) {
        let osc = Oscillator::new(dim).unwrap();
        let params = GkpParams::qubit(0.15).unwrap();
        let model = LindbladModel::two_dissipator(&osc, &params, kappa).unwrap();
        (osc, model)
    }

    #[test]
    fn vacuum_is_dark_for_loss() {
        let osc = Oscillator::new(8).unwrap();
        let model = LindbladModel::photon_loss(&osc, 0.3).unwrap();
        let rho = crate::states::QuantumState::vacuum(8).unwrap().density();
        let out = model.apply_generator(&rho).unwrap();
        assert!(linalg::max_abs(&out.view()) == 0.0);
    }

    #[test]
    fn single_photon_decays() {
        let osc = Oscillator::new(8).unwrap();
        let kappa = 0.3;
        let model = LindbladModel::photon_loss(&osc, kappa).unwrap();
        let rho = crate::states::QuantumState::fock(8, 1).unwrap().density();
        let out = model.apply_generator(&rho).unwrap();
        let mut expected = CMat::zeros((8, 8));
        expected[[0, 0]] = C64::from(kappa);
        expected[[1, 1]] = C64::from(-kappa);
        assert!(linalg::max_abs_diff(&out.view(), &expected.view()) < 1e-15);
    }

    #[test]
    fn sparse_loss_matches_dense_jump() {
        let osc = Oscillator::new(12).unwrap();
        let sparse = LindbladModel::photon_loss(&osc, 0.7).unwrap();
        let dense = LindbladModel::new(vec![(osc.a.clone(), 0.7)], None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_density(12, &mut rng);
        let a = sparse.apply_generator(&rho).unwrap();
        let b = dense.apply_generator(&rho).unwrap();
        assert!(linalg::max_abs_diff(&a.view(), &b.view()) < 1e-13);
        let o = random_hermitian(12, &mut rng);
        let a = sparse.apply_adjoint(&o).unwrap();
        let b = dense.apply_adjoint(&o).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-13);
    }

    #[test]
    fn generator_matches_textbook_form() {
        let (_, model) = stabilizer(30, 0.01);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho = random_density(30, &mut rng);
        let out = model.apply_generator(&rho).unwrap();
        let mut reference = CMat::zeros((30, 30));
        for j in model.jumps() {
            let l = j.op.entries();
            let lh = linalg::adjoint(l);
            let k = linalg::matmul(&lh, l);
            let term = linalg::matmul(&linalg::matmul(l, &rho), &lh)
                - (linalg::matmul(&k, &rho) + linalg::matmul(&rho, &k)).mapv(|z| z * 0.5);
            reference = reference + term.mapv(|z| z * j.rate);
        }
        assert!(linalg::max_abs_diff(&out.view(), &reference.view()) < 1e-12);
    }

    #[test]
    fn generator_is_traceless_on_random_states() {
        let (_, model) = stabilizer(40, 0.02);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let rho = random_density(40, &mut rng);
            let out = model.apply_generator(&rho).unwrap();
            assert!(linalg::trace(&out).norm() <= 1e-10);
            assert!(linalg::hermiticity_residual(&out.view()) <= 1e-12);
        }
    }

    #[test]
    fn adjoint_unital_and_loss_on_number() {
        let (osc, model) = stabilizer(20, 0.05);
        let id = FockOperator::identity(20);
        let out = model.apply_adjoint(&id).unwrap();
        assert!(linalg::max_abs(&out.entries().view()) <= 1e-12);

        let loss = LindbladModel::photon_loss(&osc, 1.0).unwrap();
        let out = loss.apply_adjoint(&osc.number).unwrap();
        let proj = InteriorProjector::new(20, 15).unwrap();
        assert!(proj.max_abs_diff(out.entries(), osc.number.scale(C64::from(-1.0)).entries()) <= 1e-12);
    }

    #[test]
    fn adjoint_is_sum_of_channel_terms() {
        let (_, model) = stabilizer(24, 0.03);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let o = random_hermitian(24, &mut rng);
        let mut reference = CMat::zeros((24, 24));
        for j in model.jumps() {
            let t = channel_adjoint_term(&j.op, &o).unwrap();
            reference = reference + t.entries().mapv(|z| z * j.rate);
        }
        let out = model.apply_adjoint(&o).unwrap();
        assert!(linalg::max_abs_diff(&out.entries().view(), &reference.view()) < 1e-11);
    }

    #[test]
    fn duality_on_random_pairs() {
        let (_, model) = stabilizer(40, 0.01);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let rho = random_density(40, &mut rng);
            let o = random_hermitian(40, &mut rng);
            let lhs = linalg::trace_product(model.apply_adjoint(&o).unwrap().entries(), &rho);
            let rhs = linalg::trace_product(o.entries(), &model.apply_generator(&rho).unwrap());
            let scale = lhs.norm().max(rhs.norm()).max(1e-300);
            assert!((lhs - rhs).norm() / scale <= 1e-9);
        }
    }

    #[test]
    fn hamiltonian_term() {
        let osc = Oscillator::new(10).unwrap();
        let h = osc.number.clone();
        let model = LindbladModel::new(vec![(osc.a.clone(), 0.0)], Some(h.clone())).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = random_density(10, &mut rng);
        let out = model.apply_generator(&rho).unwrap();
        let comm = linalg::matmul(h.entries(), &rho) - linalg::matmul(&rho, h.entries());
        let expected = comm.mapv(|z| z * C64::new(0.0, -1.0));
        assert!(linalg::max_abs_diff(&out.view(), &expected.view()) < 1e-13);
    }

    #[test]
    fn model_validation() {
        let osc = Oscillator::new(6).unwrap();
        let other = Oscillator::new(7).unwrap();
        assert!(LindbladModel::new(vec![(osc.a.clone(), -1.0)], None).is_err());
        assert!(LindbladModel::new(vec![(osc.a.clone(), 1.0), (other.a.clone(), 1.0)], None).is_err());
        assert!(LindbladModel::new(vec![], None).is_err());
        let model = LindbladModel::photon_loss(&osc, 1.0).unwrap();
        assert!(model.apply_generator(&CMat::zeros((7, 7))).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn trace_and_duality_invariants(seed in any::<u64>(), kappa in 0.0f64..0.2, eps in 0.08f64..0.4) {
            let dim = 16;
            let osc = Oscillator::new(dim).unwrap();
            let params = GkpParams::qubit(eps).unwrap();
            let model = LindbladModel::two_dissipator(&osc, &params, kappa).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_density(dim, &mut rng);
            let out = model.apply_generator(&rho).unwrap();
            prop_assert!(linalg::trace(&out).norm() <= 1e-10);
            let o = random_hermitian(dim, &mut rng);
            let lhs = linalg::trace_product(model.apply_adjoint(&o).unwrap().entries(), &rho);
            let rhs = linalg::trace_product(o.entries(), &out);
            prop_assert!((lhs - rhs).norm() <= 1e-9 * lhs.norm().max(1.0));
        }
    }
}
