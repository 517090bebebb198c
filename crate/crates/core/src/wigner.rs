//! Wigner quasi-probability maps on rectangular phase-space grids.
//!
//! `W(x, p) = (1/pi) \int rho(x + y, x - y) exp(-2 i p y) dy`, with the
//! density matrix taken to position space through the Hermite basis. The
//! integrand is band-limited, so the trapezoidal rule on a step below the
//! Nyquist spacing is spectrally accurate.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite;
use crate::linalg::CMat;
use crate::states::QuantumState;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhaseGrid {
    pub fn new(x: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if x.is_empty() || p.is_empty() {
            return Err(Error::InvalidRequest("phase-space grid needs at least one point per axis".into()));
        }
        Ok(Self { x, p })
    }

    /// Square grid with `n` points per axis on `[-extent, extent]`.
    pub fn square(extent: f64, n: usize) -> Result<Self> {
        if n < 2 || !(extent > 0.0) {
            return Err(Error::InvalidRequest("square grid needs n >= 2 and a positive extent".into()));
        }
        let axis: Vec<f64> = (0..n)
            .map(|j| -extent + 2.0 * extent * j as f64 / (n - 1) as f64)
            .collect();
        Ok(Self {
            x: axis.clone(),
            p: axis,
        })
    }

    pub fn extent(&self) -> f64 {
        self.x
            .iter()
            .chain(self.p.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Half-width of phase space in which a `dim`-level truncation is trustworthy.
pub fn validity_extent(dim: usize) -> f64 {
    hermite::support_radius(dim) + 2.0
}

#[derive(Clone, Debug)]
pub struct WignerMap {
    pub grid: PhaseGrid,
    /// `values[[i, j]] = W(x_j, p_i)`: rows follow `p`, columns follow `x`.
    pub values: Array2<f64>,
    pub meta: WignerMeta,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WignerMeta {
    pub dim: usize,
    pub x_range: [f64; 2],
    pub p_range: [f64; 2],
    pub validity_extent: f64,
    /// Set when the grid reaches beyond [`validity_extent`].
    pub exceeds_validity: bool,
    /// Trapezoidal `\int\int W`, meaningful only on a uniform grid that
    /// covers the state.
    pub normalization: f64,
}

/// Wigner function of `state` on `grid`.
pub fn wigner(state: &QuantumState, grid: &PhaseGrid) -> Result<WignerMap> {
    let rho = state.density();
    let dim = rho.nrows();
    let radius = hermite::support_radius(dim) + 4.0;
    let p_max = grid.p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // Bandwidth in y: state momenta up to ~sqrt(2 dim + 1) on both sides,
    // plus the carrier exp(-2 i p y).
    let omega = 2.0 * (2.0 * dim as f64 + 1.0).sqrt() + 2.0 * p_max;
    let h = std::f64::consts::PI / (2.0 * omega);

    let columns: Vec<Array1<f64>> = grid
        .x
        .par_iter()
        .map(|&x| column(&rho, x, radius, h, &grid.p))
        .collect();

    let mut values = Array2::zeros((grid.p.len(), grid.x.len()));
    for (j, col) in columns.into_iter().enumerate() {
        values.column_mut(j).assign(&col);
    }

    let extent = validity_extent(dim);
    let meta = WignerMeta {
        dim,
        x_range: range(&grid.x),
        p_range: range(&grid.p),
        validity_extent: extent,
        exceeds_validity: grid.extent() > extent,
        normalization: integrate_2d(&grid.x, &grid.p, &values),
    };
    Ok(WignerMap {
        grid: grid.clone(),
        values,
        meta,
    })
}

fn range(v: &[f64]) -> [f64; 2] {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    [lo, hi]
}

/// `W(x, p)` for one `x` and all `p`.
fn column(rho: &CMat, x: f64, radius: f64, h: f64, ps: &[f64]) -> Array1<f64> {
    let dim = rho.nrows();
    // rho(x + y, x - y) vanishes once either argument leaves the support.
    let y_max = (radius - x.abs()).max(0.0);
    let steps = (y_max / h).ceil() as usize;
    let ys: Vec<f64> = (0..=steps).map(|j| j as f64 * h).collect();
    let plus: Vec<f64> = ys.iter().map(|y| x + y).collect();
    let minus: Vec<f64> = ys.iter().map(|y| x - y).collect();
    let bp = hermite::hermite_matrix(dim, &plus).mapv(C64::from);
    let bm = hermite::hermite_matrix(dim, &minus).mapv(C64::from);
    let rb = rho.dot(&bm);
    // s(y) = phi(x+y)^T rho phi(x-y), and s(-y) = conj(s(y)).
    let s: Vec<C64> = (0..ys.len())
        .map(|j| {
            bp.column(j)
                .iter()
                .zip(rb.column(j).iter())
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect();
    Array1::from_iter(ps.iter().map(|&p| {
        let mut acc = s[0].re;
        for (j, sj) in s.iter().enumerate().skip(1) {
            let phase = C64::from_polar(1.0, -2.0 * p * ys[j]);
            acc += 2.0 * (sj * phase).re;
        }
        acc * h / std::f64::consts::PI
    }))
}

fn trapezoid(xs: &[f64], ys: impl Fn(usize) -> f64) -> f64 {
    (1..xs.len())
        .map(|j| 0.5 * (xs[j] - xs[j - 1]) * (ys(j) + ys(j - 1)))
        .sum()
}

fn integrate_2d(xs: &[f64], ps: &[f64], values: &Array2<f64>) -> f64 {
    if xs.len() < 2 || ps.len() < 2 {
        return f64::NAN;
    }
    let rows: Vec<f64> = (0..ps.len())
        .map(|i| trapezoid(xs, |j| values[[i, j]]))
        .collect();
    trapezoid(ps, |i| rows[i])
}

impl WignerMap {
    /// `\int W dp` at every grid `x` (position density).
    pub fn x_marginal(&self) -> Array1<f64> {
        let p = &self.grid.p;
        Array1::from_iter((0..self.grid.x.len()).map(|j| trapezoid(p, |i| self.values[[i, j]])))
    }

    /// `\int W dx` at every grid `p` (momentum density).
    pub fn p_marginal(&self) -> Array1<f64> {
        let x = &self.grid.x;
        Array1::from_iter((0..self.grid.p.len()).map(|i| trapezoid(x, |j| self.values[[i, j]])))
    }

    /// Value at the grid point nearest to `(x, p)`.
    pub fn nearest(&self, x: f64, p: f64) -> f64 {
        let idx = |axis: &[f64], v: f64| {
            axis.iter()
                .enumerate()
                .min_by(|a, b| (a.1 - v).abs().total_cmp(&(b.1 - v).abs()))
                .map(|(i, _)| i)
                .unwrap_or(0)
        };
        self.values[[idx(&self.grid.p, p), idx(&self.grid.x, x)]]
    }

    /// CSV with a header row of `x` values and a leading `p` column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p\\x");
        for x in &self.grid.x {
            out.push_str(&format!(",{x:.10e}"));
        }
        out.push('\n');
        for (i, p) in self.grid.p.iter().enumerate() {
            out.push_str(&format!("{p:.10e}"));
            for j in 0..self.grid.x.len() {
                out.push_str(&format!(",{:.10e}", self.values[[i, j]]));
            }
            out.push('\n');
        }
        out
    }
}

/// Median spacing between neighbouring peaks of a 1D profile, counting only
/// peaks at least `min_fraction` of the tallest one.
pub fn peak_spacing(axis: &[f64], profile: &[f64], min_fraction: f64) -> Option<f64> {
    let peaks = crate::states::local_maxima(axis, profile, min_fraction);
    if peaks.len() < 2 {
        return None;
    }
    let mut gaps: Vec<f64> = peaks.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    Some(gaps[gaps.len() / 2])
}

/// Maximum of `|a - b|` over matching samples.
pub fn max_deviation(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{build_codeword, position_density, GkpParams};
    use std::f64::consts::PI;

    #[test]
    fn vacuum_is_gaussian() {
        let vac = QuantumState::vacuum(40).unwrap();
        let grid = PhaseGrid::square(3.0, 25).unwrap();
        let map = wigner(&vac, &grid).unwrap();
        let mut worst = 0.0f64;
        for (i, &p) in grid.p.iter().enumerate() {
            for (j, &x) in grid.x.iter().enumerate() {
                let exact = (-x * x - p * p).exp() / PI;
                worst = worst.max((map.values[[i, j]] - exact).abs());
            }
        }
        assert!(worst <= 1e-6, "max error {worst}");
        assert!(!map.meta.exceeds_validity);
    }

    #[test]
    fn first_fock_state_is_negative_at_origin() {
        let one = QuantumState::fock(40, 1).unwrap();
        let grid = PhaseGrid::new(vec![0.0], vec![0.0]).unwrap();
        let map = wigner(&one, &grid).unwrap();
        assert!((map.values[[0, 0]] + 1.0 / PI).abs() <= 1e-6);
    }

    #[test]
    fn normalization_and_marginal() {
        let dim = 60;
        let params = GkpParams::qubit(0.3).unwrap();
        let cw = build_codeword(dim, &params, 0).unwrap();
        let extent = validity_extent(dim);
        let grid = PhaseGrid::square(extent, 241).unwrap();
        let map = wigner(&cw, &grid).unwrap();
        assert!((map.meta.normalization - 1.0).abs() <= 1e-3);
        let dens = position_density(&cw, &grid.x);
        assert!(max_deviation(&map.x_marginal(), &dens) <= 1e-4);
    }

    #[test]
    fn oversized_grid_is_flagged() {
        let grid = PhaseGrid::square(20.0, 5).unwrap();
        let map = wigner(&QuantumState::vacuum(10).unwrap(), &grid).unwrap();
        assert!(map.meta.exceeds_validity);
    }

    #[test]
    fn csv_layout() {
        let grid = PhaseGrid::new(vec![-1.0, 0.0, 1.0], vec![0.5, 1.5]).unwrap();
        let map = wigner(&QuantumState::vacuum(8).unwrap(), &grid).unwrap();
        let csv = map.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0].split(',').count(), 4);
        assert!(lines[1].starts_with("5.0000000000e-1"));
    }

    #[test]
    fn spacing_of_sampled_comb() {
        let xs: Vec<f64> = (0..2001).map(|j| -10.0 + j as f64 * 0.01).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (2.0 * PI * x / 2.5).cos() + 1.0).collect();
        let s = peak_spacing(&xs, &ys, 0.5).unwrap();
        assert!((s - 2.5).abs() < 1e-3);
    }
}
