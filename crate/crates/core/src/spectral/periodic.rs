//! Heisenberg action of the two-dissipator generator on periodic
//! observables `f(2 eta q)` at `eta^2 = pi`.
//!
//! `M2` commutes with `f(2 eta q)` there, and the `M1` contribution has the
//! form `-drift sin(2 eta q) f'(2 eta q) + diffusion cos^2(eta q) f''(2 eta q)`.
//! Two coefficient sets are provided: the conventional one, and the one that
//! follows from expanding `D*[M1]` term by term. They differ in the `eps^2`
//! parts; [`PeriodicCoefficients::sigma`] gives the reduced-operator ratio for
//! either.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fock::{FockOperator, InteriorProjector, Oscillator};

/// Fraction of the Fock space in which generator actions on `f(2 eta q)` are
/// free of truncation artifacts. The products involved shift momentum by up
/// to `4 eta`, so the usable block is well inside the 0.8 default.
pub const PERIODIC_INTERIOR: f64 = 0.4;

pub fn periodic_interior(dim: usize) -> Result<InteriorProjector> {
    InteriorProjector::with_fraction(dim, PERIODIC_INTERIOR)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicCoefficients {
    /// Coefficient of `-sin(2 eta q) f'`.
    pub drift: f64,
    /// Coefficient of `cos^2(eta q) f''`.
    pub diffusion: f64,
}

impl PeriodicCoefficients {
    /// `drift = (eps + 2 eps^2 eta) eta`, `diffusion = 4 eps^2 eta^2`.
    pub fn nominal(epsilon: f64, eta: f64) -> Self {
        Self {
            drift: (epsilon + 2.0 * epsilon * epsilon * eta) * eta,
            diffusion: 4.0 * epsilon * epsilon * eta * eta,
        }
    }

    /// `drift = eps eta + eps^2 eta^2`, `diffusion = 2 eps^2 eta^2`.
    ///
    /// Writing `M1 = S + i eps C p` with `S = sin(eta q)`, `C = cos(eta q)`,
    /// and `O = f(2 eta q)`: `M1^dagger [O, M1] = i eps (S - i eps p C) [O, C p]`
    /// with `[O, C p] = i 2 eta C f'`, and `[M1^dagger, O] M1` likewise. The
    /// `eps^2` terms come from `p C f' C` and `C f' C p`, whose symmetrized sum
    /// is `2 eta^2 C^2 f''` minus `eta^2`-weighted first-derivative pieces
    /// `sin(2 eta q) f'`. Summing gives the coefficients above.
    pub fn exact(epsilon: f64, eta: f64) -> Self {
        let x = epsilon * eta;
        Self {
            drift: x + x * x,
            diffusion: 2.0 * x * x,
        }
    }

    /// Ratio `sigma = diffusion / (2 drift)`, using `cos^2(eta q) = (1 + cos(2 eta q))/2`.
    pub fn sigma(&self) -> f64 {
        self.diffusion / (2.0 * self.drift)
    }

    /// `-drift sin(2 eta q) f'(2 eta q) + diffusion cos^2(eta q) f''(2 eta q)`
    /// as a spectral function of `q`.
    pub fn apply(
        &self,
        osc: &Oscillator,
        eta: f64,
        df: impl Fn(f64) -> f64,
        d2f: impl Fn(f64) -> f64,
    ) -> FockOperator {
        osc.f_q(|x| {
            let th = 2.0 * eta * x;
            let c = (eta * x).cos();
            -self.drift * th.sin() * df(th) + self.diffusion * c * c * d2f(th)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::LindbladModel;
    use crate::states::GkpParams;
    use std::f64::consts::PI;

    fn heisenberg(dim: usize, eps: f64) -> (Oscillator, LindbladModel, f64) {
        let osc = Oscillator::new(dim).unwrap();
        let params = GkpParams::qubit(eps).unwrap();
        let model = LindbladModel::two_dissipator(&osc, &params, 0.0).unwrap();
        (osc, model, params.eta)
    }

    #[test]
    fn exact_coefficients_match_operator_algebra() {
        let (osc, model, eta) = heisenberg(120, 0.15);
        let proj = periodic_interior(120).unwrap();
        let coeffs = PeriodicCoefficients::exact(0.15, eta);
        let cases: [(fn(f64) -> f64, fn(f64) -> f64, fn(f64) -> f64); 2] = [
            (f64::cos, |t| -t.sin(), |t| -t.cos()),
            (f64::sin, f64::cos, |t| -t.sin()),
        ];
        for (f, df, d2f) in cases {
            let o = osc.f_q(|x| f(2.0 * eta * x));
            let lhs = model.apply_adjoint(&o).unwrap();
            let rhs = coeffs.apply(&osc, eta, df, d2f);
            let e = proj.max_abs_diff(lhs.entries(), rhs.entries()); assert!(e < 1e-9, "{e}");
        }
    }

    #[test]
    fn nominal_coefficients_miss_the_operator_algebra() {
        let (osc, model, eta) = heisenberg(120, 0.15);
        let proj = periodic_interior(120).unwrap();
        let o = osc.f_q(|x| (2.0 * eta * x).cos());
        let lhs = model.apply_adjoint(&o).unwrap();
        let rhs = PeriodicCoefficients::nominal(0.15, eta).apply(&osc, eta, |t| -t.sin(), |t| -t.cos());
        let e = proj.max_abs_diff(lhs.entries(), rhs.entries());
        assert!(e > 1e-2 && e < 5e-2, "{e}");
    }

    #[test]
    fn nominal_coefficients_differ_at_order_eps_squared() {
        let eta = PI.sqrt();
        let a = PeriodicCoefficients::nominal(0.15, eta);
        let b = PeriodicCoefficients::exact(0.15, eta);
        let x = 0.15 * eta;
        assert!((a.drift - b.drift - x * x).abs() < 1e-14);
        assert!((a.diffusion - 2.0 * b.diffusion).abs() < 1e-14);
        assert!((a.sigma() - 2.0 * x / (1.0 + 2.0 * x)).abs() < 1e-14);
        assert!((b.sigma() - x / (1.0 + x)).abs() < 1e-14);
    }

    #[test]
    fn m2_commutes_with_periodic_observables() {
        let dim = 120;
        let osc = Oscillator::new(dim).unwrap();
        let eta = PI.sqrt();
        let (_, m2) = osc.two_dissipators(eta, 0.15).unwrap();
        let proj = periodic_interior(dim).unwrap();
        for f in [f64::cos, f64::sin] {
            let o = osc.f_q(|x| f(2.0 * eta * x));
            let c = m2.commutator(&o);
            let e = proj.max_abs(c.entries()); assert!(e <= 1e-8, "{e}");
        }
    }
}
