use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CaaError, Result};
use crate::matrix::DenseMatrix;

/// Recipe for a matrix with one planted two-to-two correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub n: usize,
    pub m: usize,
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
    pub support_u: [usize; 2],
    pub support_v: [usize; 2],
    pub coeffs_u: [f64; 2],
    pub coeffs_v: [f64; 2],
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            n: 200,
            m: 20,
            mean: [0.0, 0.0],
            cov: [[1.0, 0.95], [0.95, 1.0]],
            support_u: [2, 5],
            support_v: [11, 17],
            coeffs_u: [0.8, 0.6],
            coeffs_v: [0.7, -0.7],
            seed: 0,
        }
    }
}

impl PlantedSpec {
    pub fn with_seed(seed: u64) -> Self {
        PlantedSpec {
            seed,
            ..PlantedSpec::default()
        }
    }

    pub fn planted_columns(&self) -> Vec<usize> {
        let mut cols = vec![
            self.support_u[0],
            self.support_u[1],
            self.support_v[0],
            self.support_v[1],
        ];
        cols.sort_unstable();
        cols
    }

    pub fn validate(&self) -> Result<()> {
        let cols = self.planted_columns();
        if cols.windows(2).any(|w| w[0] == w[1]) {
            return Err(CaaError::InvalidSpec(
                "planted supports must be four distinct columns".into(),
            ));
        }
        if cols.iter().any(|&c| c >= self.m) {
            return Err(CaaError::InvalidSpec(format!(
                "planted column out of range for m = {}",
                self.m
            )));
        }
        if self.n < 1 {
            return Err(CaaError::InvalidSpec("n must be positive".into()));
        }
        if self
            .coeffs_u
            .iter()
            .chain(&self.coeffs_v)
            .any(|c| *c == 0.0 || !c.is_finite())
        {
            return Err(CaaError::InvalidSpec("coefficients must be finite and nonzero".into()));
        }
        let c = &self.cov;
        let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
        if c[0][1] != c[1][0] || !(c[0][0] > 0.0) || !(det > 0.0) {
            return Err(CaaError::InvalidSpec("cov must be symmetric positive definite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PlantedData {
    pub x: DenseMatrix,
    pub truth_u: Vec<f64>,
    pub truth_v: Vec<f64>,
    /// The sampled Gaussian points `(a_i, b_i)`.
    pub points: Vec<[f64; 2]>,
}

/// Samples `n` points from the bivariate Gaussian and builds `X` so that
/// `X truth_u = a` and `X truth_v = b` exactly. The first column of each
/// support is free noise; the second solves the linear constraint. All
/// other columns are i.i.d. standard normal.
pub fn gen_planted(spec: &PlantedSpec) -> Result<PlantedData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let c = &spec.cov;
    let l11 = c[0][0].sqrt();
    let l21 = c[1][0] / l11;
    let l22 = (c[1][1] - l21 * l21).sqrt();

    let (n, m) = (spec.n, spec.m);
    let mut data = vec![0.0; n * m];
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let a = spec.mean[0] + l11 * z1;
        let b = spec.mean[1] + l21 * z1 + l22 * z2;
        points.push([a, b]);
        let row = &mut data[i * m..(i + 1) * m];
        for e in row.iter_mut() {
            *e = rng.sample(StandardNormal);
        }
        let [p, q] = spec.support_u;
        row[q] = (a - spec.coeffs_u[0] * row[p]) / spec.coeffs_u[1];
        let [p, q] = spec.support_v;
        row[q] = (b - spec.coeffs_v[0] * row[p]) / spec.coeffs_v[1];
    }
    let mut truth_u = vec![0.0; m];
    let mut truth_v = vec![0.0; m];
    for k in 0..2 {
        truth_u[spec.support_u[k]] = spec.coeffs_u[k];
        truth_v[spec.support_v[k]] = spec.coeffs_v[k];
    }
    Ok(PlantedData {
        x: DenseMatrix::new(n, m, data)?,
        truth_u,
        truth_v,
        points,
    })
}
