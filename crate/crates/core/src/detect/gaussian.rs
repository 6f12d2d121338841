use serde::{Deserialize, Serialize};

use crate::error::{CaaError, Result};
use crate::matrix::DenseMatrix;
use crate::model::{project, CanonicalPair};

const RIDGE_SCALE: f64 = 1e-8;

/// Bivariate Gaussian fitted on one canonical projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianChar {
    pub mu: [f64; 2],
    /// Sample covariance, possibly ridge-regularized.
    pub sigma: [[f64; 2]; 2],
    pub sigma_inv: [[f64; 2]; 2],
}

impl GaussianChar {
    /// Builds the characterization from a mean and a covariance, adding a
    /// `1e-8 * trace` ridge when the covariance is close to singular.
    pub fn new(mu: [f64; 2], sigma: [[f64; 2]; 2]) -> Result<Self> {
        let sym = 0.5 * (sigma[0][1] + sigma[1][0]);
        let mut s = [[sigma[0][0], sym], [sym, sigma[1][1]]];
        let trace = s[0][0] + s[1][1];
        if !(trace > 0.0) || !trace.is_finite() {
            return Err(CaaError::InvalidArgument(
                "covariance must have positive trace".into(),
            ));
        }
        let ridge = RIDGE_SCALE * trace;
        if min_eigenvalue(&s) < ridge {
            s[0][0] += ridge;
            s[1][1] += ridge;
        }
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        if !(det > 0.0) {
            return Err(CaaError::InvalidArgument(
                "covariance is not positive definite".into(),
            ));
        }
        let sigma_inv = [
            [s[1][1] / det, -s[0][1] / det],
            [-s[1][0] / det, s[0][0] / det],
        ];
        Ok(GaussianChar {
            mu,
            sigma: s,
            sigma_inv,
        })
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        eigenvalues(&self.sigma)
    }
}

fn eigenvalues(s: &[[f64; 2]; 2]) -> [f64; 2] {
    let half_trace = 0.5 * (s[0][0] + s[1][1]);
    let half_diff = 0.5 * (s[0][0] - s[1][1]);
    let r = (half_diff * half_diff + s[0][1] * s[1][0]).max(0.0).sqrt();
    [half_trace + r, half_trace - r]
}

fn min_eigenvalue(s: &[[f64; 2]; 2]) -> f64 {
    eigenvalues(s)[1]
}

/// `sqrt((p - mu)^T Sigma^{-1} (p - mu))`.
pub fn mahalanobis(p: [f64; 2], g: &GaussianChar) -> f64 {
    let d = [p[0] - g.mu[0], p[1] - g.mu[1]];
    let si = &g.sigma_inv;
    let q = d[0] * (si[0][0] * d[0] + si[0][1] * d[1]) + d[1] * (si[1][0] * d[0] + si[1][1] * d[1]);
    q.max(0.0).sqrt()
}

/// Fits one Gaussian per pair on the projected training rows (sample mean,
/// `n - 1` covariance).
pub fn fit_gaussians(x_std: &DenseMatrix, pairs: &[CanonicalPair]) -> Result<Vec<GaussianChar>> {
    let n = x_std.rows();
    if n < 3 {
        return Err(CaaError::InsufficientData(
            "Gaussian characterization needs at least three rows".into(),
        ));
    }
    pairs
        .iter()
        .map(|pair| {
            let proj = project(x_std, pair)?;
            let (a, b) = (proj.column(0), proj.column(1));
            let mean = |c: &[f64]| c.iter().sum::<f64>() / n as f64;
            let mu = [mean(&a), mean(&b)];
            let (mut saa, mut sab, mut sbb) = (0.0, 0.0, 0.0);
            for (x, y) in a.iter().zip(&b) {
                let (dx, dy) = (x - mu[0], y - mu[1]);
                saa += dx * dx;
                sab += dx * dy;
                sbb += dy * dy;
            }
            if saa == 0.0 {
                return Err(CaaError::DegenerateProjection(0));
            }
            if sbb == 0.0 {
                return Err(CaaError::DegenerateProjection(1));
            }
            let k = (n - 1) as f64;
            GaussianChar::new(mu, [[saa / k, sab / k], [sab / k, sbb / k]])
        })
        .collect()
}
