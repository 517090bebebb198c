//! Normalized Hermite functions, the position-space wavefunctions of the
//! Fock states.

use ndarray::{Array1, Array2};

/// Rescaling threshold for the recurrence; far from the origin `phi_0`
/// underflows long before the higher functions become small.
const RESCALE: f64 = 1e150;

/// `phi_0(x), ..., phi_{n-1}(x)` via the three-term recurrence
/// `phi_k = sqrt(2/k) x phi_{k-1} - sqrt((k-1)/k) phi_{k-2}`.
///
/// The recurrence is run on rescaled values with a separate log scale so the
/// result stays accurate where `exp(-x^2/2)` alone would underflow.
pub fn hermite_functions(n: usize, x: f64) -> Array1<f64> {
    let mut out = Array1::zeros(n);
    if n == 0 {
        return out;
    }
    let log_phi0 = -0.5 * x * x - 0.25 * std::f64::consts::PI.ln();
    let mut log_scale = log_phi0;
    let mut prev = 0.0;
    let mut cur = 1.0;
    out[0] = log_scale.exp();
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / kf).sqrt() * x * cur - ((kf - 1.0) / kf).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += RESCALE.ln();
        }
        out[k] = cur * log_scale.exp();
    }
    out
}

/// Basis matrix with `phi_n(x_j)` in row `n`, column `j`.
pub fn hermite_matrix(n: usize, xs: &[f64]) -> Array2<f64> {
    let mut m = Array2::zeros((n, xs.len()));
    for (j, &x) in xs.iter().enumerate() {
        m.column_mut(j).assign(&hermite_functions(n, x));
    }
    m
}

/// Radius beyond which the first `n` Hermite functions are negligible.
pub fn support_radius(n: usize) -> f64 {
    (2.0 * n as f64).sqrt()
}
