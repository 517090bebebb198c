//! Least-squares fits for decay rates and power-law scaling.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Inverse, Solve};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `y = intercept + slope * x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// RMS of the residuals.
    pub residual: f64,
    pub points: usize,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::ShapeMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::FitFailure(format!("line fit needs two points, got {n}")));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::FitFailure("non-finite input".into()));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::FitFailure("abscissae are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(LineFit {
        intercept,
        slope,
        residual: (rss / nf).sqrt(),
        points: n,
    })
}

/// `y = amplitude * exp(-rate * t)`, fitted linearly in `log y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub rate: f64,
    pub amplitude: f64,
    /// RMS residual in log space.
    pub residual: f64,
    pub points: usize,
}

pub fn fit_exponential(ts: &[f64], ys: &[f64]) -> Result<ExponentialFit> {
    if ys.iter().any(|&y| y <= 0.0) {
        return Err(Error::FitFailure("exponential fit needs positive data".into()));
    }
    let logs: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let line = fit_line(ts, &logs)?;
    Ok(ExponentialFit {
        rate: -line.slope,
        amplitude: line.intercept.exp(),
        residual: line.residual,
        points: line.points,
    })
}

/// One sweep cell: noise rate, regularization and the measured decay rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub kappa: f64,
    pub epsilon: f64,
    pub gamma: f64,
}

/// `gamma = a * kappa^n / epsilon^r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub a: f64,
    pub n: f64,
    pub r: f64,
    /// Covariance of `(log a, n, r)`; zero when the fit is exact or has no
    /// spare degrees of freedom.
    pub covariance: [[f64; 3]; 3],
    /// Log-space residual per input point, in input order.
    pub residuals: Vec<f64>,
    pub rms: f64,
}

impl PowerLawFit {
    pub fn predict(&self, kappa: f64, epsilon: f64) -> f64 {
        self.a * kappa.powf(self.n) / epsilon.powf(self.r)
    }
}

/// Least-squares fit of `log gamma = log a + n log kappa - r log epsilon`.
pub fn fit_power_law(points: &[ScalingPoint]) -> Result<PowerLawFit> {
    let m = points.len();
    if m < 3 {
        return Err(Error::FitFailure(format!("power-law fit needs three points, got {m}")));
    }
    if points.iter().any(|p| p.kappa <= 0.0 || p.epsilon <= 0.0 || p.gamma <= 0.0) {
        return Err(Error::FitFailure("power-law fit needs positive kappa, epsilon and rate".into()));
    }
    let mut x = Array2::<f64>::zeros((m, 3));
    let mut y = Array1::<f64>::zeros(m);
    for (i, p) in points.iter().enumerate() {
        x[[i, 0]] = 1.0;
        x[[i, 1]] = p.kappa.ln();
        x[[i, 2]] = -p.epsilon.ln();
        y[i] = p.gamma.ln();
    }
    let xtx = x.t().dot(&x);
    let xty = x.t().dot(&y);
    let beta = xtx
        .solve(&xty)
        .map_err(|e| Error::FitFailure(format!("degenerate design: {e}")))?;
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitFailure("degenerate design".into()));
    }
    let resid = &y - &x.dot(&beta);
    let rss = resid.dot(&resid);
    let mut covariance = [[0.0; 3]; 3];
    if m > 3 {
        let inv = xtx
            .inv()
            .map_err(|e| Error::FitFailure(format!("degenerate design: {e}")))?;
        let s2 = rss / (m - 3) as f64;
        for i in 0..3 {
            for j in 0..3 {
                covariance[i][j] = s2 * inv[[i, j]];
            }
        }
    }
    Ok(PowerLawFit {
        a: beta[0].exp(),
        n: beta[1],
        r: beta[2],
        covariance,
        rms: (rss / m as f64).sqrt(),
        residuals: resid.to_vec(),
    })
}

/// Fixed-epsilon fit `gamma = b * kappa^n`; returns `(b, n)` as a line in
/// log-log space.
pub fn fit_kappa_exponent(points: &[ScalingPoint]) -> Result<LineFit> {
    if points.iter().any(|p| p.kappa <= 0.0 || p.gamma <= 0.0) {
        return Err(Error::FitFailure("kappa fit needs positive kappa and rate".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.kappa.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.gamma.ln()).collect();
    fit_line(&xs, &ys)
}
