use serde::{Deserialize, Serialize};

use crate::error::{CaaError, Result};
use crate::matrix::{dot, standardize, svd, DenseMatrix, StandardizationParams};

/// Residual-magnitude anomaly detector on the top principal directions of
/// standardized data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaDetector {
    pub standardization: StandardizationParams,
    /// `m x k`, orthonormal columns.
    pub components: DenseMatrix,
}

/// Smallest `k` whose leading singular values explain at least `fraction`
/// of the total variance, capped at `m - 1`.
pub fn components_for_variance(singular_values: &[f64], m: usize, fraction: f64) -> usize {
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    let mut acc = 0.0;
    let mut k = singular_values.len();
    for (i, s) in singular_values.iter().enumerate() {
        acc += s * s;
        if acc >= fraction * total {
            k = i + 1;
            break;
        }
    }
    k.clamp(1, m.saturating_sub(1).max(1))
}

impl PcaDetector {
    /// Fits on raw rows; `k_pca = None` picks the smallest `k` explaining 95%
    /// of the variance.
    pub fn fit(x: &DenseMatrix, k_pca: Option<usize>) -> Result<Self> {
        let m = x.cols();
        if m < 2 {
            return Err(CaaError::InvalidArgument(
                "PCA residual detector needs at least two features".into(),
            ));
        }
        let (x_std, standardization) = standardize(x)?;
        let dec = svd(&x_std)?;
        let k = match k_pca {
            Some(k) => k,
            None => components_for_variance(&dec.s, m, 0.95),
        };
        if k == 0 || k >= m {
            return Err(CaaError::InvalidArgument(format!(
                "k_pca must satisfy 1 <= k_pca < {m}, got {k}"
            )));
        }
        if k > dec.s.len() {
            return Err(CaaError::InsufficientData(format!(
                "only {} principal directions available for k_pca = {k}",
                dec.s.len()
            )));
        }
        let mut components = DenseMatrix::zeros(m, k);
        for j in 0..k {
            for (i, val) in dec.v.column(j).into_iter().enumerate() {
                components.set(i, j, val);
            }
        }
        Ok(PcaDetector {
            standardization,
            components,
        })
    }

    pub fn k(&self) -> usize {
        self.components.cols()
    }

    /// Residual of an already standardized row.
    pub fn residual_norm(&self, z: &[f64]) -> f64 {
        let coeffs = self
            .components
            .t_matvec(z)
            .expect("standardized row matches component dimension");
        let recon = self
            .components
            .matvec(&coeffs)
            .expect("coefficient count matches components");
        let r: Vec<f64> = z.iter().zip(&recon).map(|(a, b)| a - b).collect();
        dot(&r, &r).sqrt()
    }

    /// `||x_std - C C^T x_std||_2` for a raw observation.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        let z = self.standardization.apply_row(x)?;
        Ok(self.residual_norm(&z))
    }

    pub fn scores(&self, x: &DenseMatrix) -> Result<Vec<f64>> {
        (0..x.rows()).map(|i| self.score(x.row(i))).collect()
    }
}

pub fn fit_pca_detector(x: &DenseMatrix, k_pca: usize) -> Result<PcaDetector> {
    PcaDetector::fit(x, Some(k_pca))
}

pub fn score_pca(x: &[f64], d: &PcaDetector) -> Result<f64> {
    d.score(x)
}
