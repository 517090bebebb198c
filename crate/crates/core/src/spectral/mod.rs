//! The reduced operator `A f = sin(t) f' - sigma (1 + cos t) f''` on the
//! circle and its spectral gap in `L^2(w)`, `w = (1 + cos t)^(1/sigma - 1)`.
//!
//! `A` is symmetric for `w`, with Dirichlet form
//! `<f, A g>_w = sigma \int (1 + cos t)^(1/sigma) f' g'`, so the
//! discretization is a Galerkin one in a real Fourier basis: stiffness from
//! the Dirichlet form, mass from the weighted `L^2` product, both by the
//! trapezoidal rule on a uniform periodic grid.

pub mod hardy;
pub mod periodic;

use std::f64::consts::PI;

use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::{Eigh, UPLO};
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};

pub use hardy::{verify_hardy, HardyCase, HardyReport, Side};
pub use periodic::{periodic_interior, PeriodicCoefficients};

/// Mass-matrix eigenvalues below this fraction of the largest are treated
/// as numerically null and projected out.
const MASS_CUTOFF: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedParams {
    pub sigma: f64,
    pub epsilon: Option<f64>,
    pub eta: Option<f64>,
}

impl ReducedParams {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 2.0) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: sigma,
                reason: "must lie in (0, 2) for the weight to be integrable",
            });
        }
        Ok(Self {
            sigma,
            epsilon: None,
            eta: None,
        })
    }

    /// `sigma = 2 eps eta / (1 + 2 eps eta)`, the conventional mapping.
    pub fn from_physical(epsilon: f64, eta: f64) -> Result<Self> {
        check_positive("epsilon", epsilon)?;
        check_positive("eta", eta)?;
        let x = 2.0 * epsilon * eta;
        Self::with_origin(x / (1.0 + x), epsilon, eta)
    }

    /// `sigma = eps eta / (1 + eps eta)`, the ratio obtained from a direct
    /// evaluation of the Heisenberg generator on `f(2 eta q)` (see
    /// [`PeriodicCoefficients::exact`]).
    pub fn from_operator_algebra(epsilon: f64, eta: f64) -> Result<Self> {
        check_positive("epsilon", epsilon)?;
        check_positive("eta", eta)?;
        Self::with_origin(PeriodicCoefficients::exact(epsilon, eta).sigma(), epsilon, eta)
    }

    fn with_origin(sigma: f64, epsilon: f64, eta: f64) -> Result<Self> {
        Ok(Self {
            epsilon: Some(epsilon),
            eta: Some(eta),
            ..Self::new(sigma)?
        })
    }

    /// `(1 + cos t)^(1/sigma - 1)`
    pub fn weight(&self, theta: f64) -> f64 {
        (1.0 + theta.cos()).max(0.0).powf(1.0 / self.sigma - 1.0)
    }

    /// `(1 + cos t)^(1/sigma)`
    pub fn weight2(&self, theta: f64) -> f64 {
        (1.0 + theta.cos()).max(0.0).powf(1.0 / self.sigma)
    }

    /// `true` when the weight is singular at `t = pi` (`sigma > 1`).
    pub fn singular_weight(&self) -> bool {
        self.sigma > 1.0
    }

    /// Weighted mean of `cos t`, `\int cos(t) w / \int w = 1 - sigma`.
    pub fn weighted_mean_cos(&self) -> f64 {
        1.0 - self.sigma
    }
}

#[derive(Clone, Debug)]
pub struct SpectralProblem {
    pub params: ReducedParams,
    pub n_grid: usize,
    /// Highest Fourier mode in the basis.
    pub modes: usize,
    pub theta: Array1<f64>,
    pub w: Array1<f64>,
    pub w2: Array1<f64>,
    /// Basis functions sampled on the grid, one row per function, ordered
    /// `1, cos t, sin t, cos 2t, sin 2t, ...`.
    pub basis: Array2<f64>,
    pub stiffness: Array2<f64>,
    pub mass: Array2<f64>,
    pub eigenvalues: Array1<f64>,
    /// Eigenvectors as coefficient columns in the Fourier basis.
    pub eigenvectors: Array2<f64>,
    /// Number of mass directions discarded as numerically null.
    pub dropped_directions: usize,
}

fn sym(m: &Array2<f64>) -> Array2<f64> {
    (m + &m.t()) * 0.5
}

/// Assembles and solves the Galerkin problem on `n_grid` points.
///
/// The basis holds modes up to `n_grid / 4`, so products of two basis
/// functions stay below the grid Nyquist frequency.
pub fn build_problem(params: &ReducedParams, n_grid: usize) -> Result<SpectralProblem> {
    if !(params.sigma > 0.0 && params.sigma < 2.0) {
        return Err(Error::InvalidParameter {
            name: "sigma",
            value: params.sigma,
            reason: "must lie in (0, 2)",
        });
    }
    if n_grid < 64 || n_grid % 2 != 0 {
        return Err(Error::InvalidRequest(format!(
            "grid size {n_grid} must be even and at least 64"
        )));
    }
    let modes = n_grid / 4;
    let nb = 2 * modes + 1;
    let h = 2.0 * PI / n_grid as f64;
    // For sigma > 1 the weight is infinite at t = pi; a half-step offset
    // keeps that point off the grid (convergence is then only algebraic).
    let offset = if params.singular_weight() { 0.5 } else { 0.0 };
    let theta = Array1::from_iter((0..n_grid).map(|j| (j as f64 + offset) * h));
    let w = theta.mapv(|t| params.weight(t));
    let w2 = theta.mapv(|t| params.weight2(t));

    let mut basis = Array2::zeros((nb, n_grid));
    let mut deriv = Array2::zeros((nb, n_grid));
    for (j, &t) in theta.iter().enumerate() {
        basis[[0, j]] = 1.0;
        for k in 1..=modes {
            let kf = k as f64;
            let (s, c) = (kf * t).sin_cos();
            basis[[2 * k - 1, j]] = c;
            basis[[2 * k, j]] = s;
            deriv[[2 * k - 1, j]] = -kf * s;
            deriv[[2 * k, j]] = kf * c;
        }
    }
    let weighted_d = &deriv * &(&w2 * (params.sigma * h)).insert_axis(Axis(0));
    let stiffness = sym(&weighted_d.dot(&deriv.t()));
    let weighted_b = &basis * &(&w * h).insert_axis(Axis(0));
    let mass = sym(&weighted_b.dot(&basis.t()));

    // Reduce to the numerically nondegenerate part of the mass matrix:
    // with M = V diag(m) V^T and T = V_+ diag(m_+)^(-1/2), the pencil becomes
    // the ordinary symmetric problem T^T S T.
    let (m_vals, m_vecs) = mass.eigh(UPLO::Lower)?;
    let top = m_vals.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..nb).filter(|&i| m_vals[i] > MASS_CUTOFF * top).collect();
    let mut t = Array2::zeros((nb, keep.len()));
    for (c, &i) in keep.iter().enumerate() {
        let scale = 1.0 / m_vals[i].sqrt();
        t.column_mut(c).assign(&(&m_vecs.column(i) * scale));
    }
    let reduced = sym(&t.t().dot(&stiffness).dot(&t));
    let (eigenvalues, z) = reduced.eigh(UPLO::Lower)?;
    let eigenvectors = t.dot(&z);

    Ok(SpectralProblem {
        params: *params,
        n_grid,
        modes,
        theta,
        w,
        w2,
        basis,
        stiffness,
        mass,
        eigenvalues,
        eigenvectors,
        dropped_directions: nb - keep.len(),
    })
}

impl SpectralProblem {
    /// Smallest nonzero eigenvalue. The constant function is in the basis
    /// and is an exact null vector of the stiffness, so it is eigenvalue 0.
    pub fn gap(&self) -> f64 {
        self.eigenvalues[1]
    }

    /// Eigenfunction `k` sampled on the grid, normalized in `L^2(w)`.
    pub fn eigenfunction(&self, k: usize) -> Array1<f64> {
        self.eigenvectors.column(k).dot(&self.basis)
    }

    /// Trapezoidal `\int f w`.
    pub fn weighted_integral(&self, f: &Array1<f64>) -> f64 {
        let h = 2.0 * PI / self.n_grid as f64;
        (f * &self.w).sum() * h
    }

    /// Rayleigh quotient `<c, S c> / <c, M c>` of a coefficient vector.
    pub fn rayleigh(&self, c: &Array1<f64>) -> f64 {
        c.dot(&self.stiffness.dot(c)) / c.dot(&self.mass.dot(c))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapResult {
    pub sigma: f64,
    pub lambda1: f64,
    pub n_grid: usize,
    pub converged: bool,
    /// `(n_grid, lambda1)` for every grid tried.
    pub history: Vec<(usize, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementSpec {
    pub initial_grid: usize,
    pub max_grid: usize,
    /// Relative change between successive grids that counts as converged.
    pub rel_tol: f64,
}

impl Default for RefinementSpec {
    fn default() -> Self {
        Self {
            initial_grid: 512,
            max_grid: 8192,
            rel_tol: 1e-3,
        }
    }
}

/// Spectral gap with grid doubling until two successive values agree to
/// `rel_tol`; there is always at least one doubling.
pub fn spectral_gap(params: &ReducedParams, spec: &RefinementSpec) -> Result<GapResult> {
    let mut n = spec.initial_grid;
    let mut history = vec![(n, build_problem(params, n)?.gap())];
    while n < spec.max_grid {
        n *= 2;
        let lambda = build_problem(params, n)?.gap();
        let prev = history.last().expect("non-empty").1;
        history.push((n, lambda));
        if (lambda - prev).abs() <= spec.rel_tol * lambda.abs() {
            return Ok(GapResult {
                sigma: params.sigma,
                lambda1: lambda,
                n_grid: n,
                converged: true,
                history,
            });
        }
    }
    Err(Error::RefinementFailure { history })
}

/// Decay rate `eps eta (1 + 2 eps eta) lambda1` of the reduced dynamics
/// `d_t f = -eps eta (1 + 2 eps eta) A f`.
pub fn predicted_rate(epsilon: f64, eta: f64, lambda1: f64) -> f64 {
    let x = epsilon * eta;
    x * (1.0 + 2.0 * x) * lambda1
}

/// Extreme values of `w` and `w2` on `[0, pi/2] U [3 pi/2, 2 pi]`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OuterWeightBounds {
    pub w_min: f64,
    pub w_max: f64,
    pub w2_min: f64,
    pub w2_max: f64,
}

pub fn outer_weight_bounds(params: &ReducedParams, samples: usize) -> OuterWeightBounds {
    let mut b = OuterWeightBounds {
        w_min: f64::INFINITY,
        w_max: 0.0,
        w2_min: f64::INFINITY,
        w2_max: 0.0,
    };
    for j in 0..=samples {
        // [-pi/2, pi/2] is the same set on the circle.
        let t = -PI / 2.0 + PI * j as f64 / samples as f64;
        let (w, w2) = (params.weight(t), params.weight2(t));
        b.w_min = b.w_min.min(w);
        b.w_max = b.w_max.max(w);
        b.w2_min = b.w2_min.min(w2);
        b.w2_max = b.w2_max.max(w2);
    }
    b
}
