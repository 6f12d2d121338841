//! Synthetic-analog gamma spectra.
//!
//! This is a desk-scale stand-in for real detector data: counts follow a
//! smooth continuum whose log-intensity is driven by three latent factors,
//! sampled through a Poisson counting stage. Anomalous rows carry an extra
//! localized bump. Nothing here models detector physics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::dataset::LabeledDataset;
use crate::error::{CaaError, Result};
use crate::matrix::DenseMatrix;

pub const DEFAULT_BINS: usize = 128;
pub const MIN_BINS: usize = 8;
/// Tag stored in generated metadata so results are never mistaken for
/// measurements.
pub const SYNTHETIC_ANALOG: &str = "synthetic-analog";

/// Bump height in units of the per-bin background standard deviation.
const BUMP_SCALE: f64 = 2.0;
const LATENT_RANK: usize = 3;
const BASE_COUNTS: f64 = 300.0;
const CONTINUUM_SLOPE: f64 = 0.7;
/// Log-scale spread of the latent factors.
const LATENT_SCALES: [f64; LATENT_RANK] = [0.5, 0.4, 0.4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraSpec {
    pub n_background: usize,
    pub n_anomalous: usize,
    pub bins: usize,
    pub seed: u64,
}

impl Default for SpectraSpec {
    fn default() -> Self {
        SpectraSpec {
            n_background: 2000,
            n_anomalous: 500,
            bins: DEFAULT_BINS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectraData {
    /// Background rows first, then anomalous rows.
    pub dataset: LabeledDataset,
    /// Contiguous bins that carry the injected bump.
    pub bump_bins: Vec<usize>,
    pub kind: &'static str,
}

struct Background {
    log_base: Vec<f64>,
    shapes: [Vec<f64>; LATENT_RANK],
    scales: [f64; LATENT_RANK],
}

impl Background {
    fn new(bins: usize, rng: &mut ChaCha8Rng) -> Self {
        let pos: Vec<f64> = (0..bins).map(|b| (b as f64 + 0.5) / bins as f64).collect();
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let log_base = pos.iter().map(|&p| BASE_COUNTS.ln() - CONTINUUM_SLOPE * p).collect();
        // Intensity plus a quadrature pair of slow spectral distortions. With
        // equal weight on the pair every bin sees the same latent variance,
        // so no energy region dominates the correlation structure.
        let angle = |p: f64| std::f64::consts::TAU * p + phase;
        let shapes = [
            vec![1.0; bins],
            pos.iter().map(|&p| angle(p).cos()).collect(),
            pos.iter().map(|&p| angle(p).sin()).collect(),
        ];
        Background {
            log_base,
            shapes,
            scales: LATENT_SCALES,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut latent = [0.0; LATENT_RANK];
        for (z, s) in latent.iter_mut().zip(&self.scales) {
            *z = s * rng.sample::<f64, _>(StandardNormal);
        }
        self.log_base
            .iter()
            .enumerate()
            .map(|(b, lb)| {
                let log_rate = lb + (0..LATENT_RANK).map(|k| latent[k] * self.shapes[k][b]).sum::<f64>();
                poisson(log_rate.exp(), rng)
            })
            .collect()
    }
}

fn poisson(rate: f64, rng: &mut ChaCha8Rng) -> f64 {
    Poisson::new(rate).map_or(0.0, |d| d.sample(rng))
}

/// Generates `n_background` normal spectra followed by `n_anomalous` spectra
/// with a bump of 3 to 5 contiguous bins at a seeded location. The bump adds
/// twice the empirical background standard deviation of each affected bin.
pub fn gen_spectra(spec: &SpectraSpec) -> Result<SpectraData> {
    let bins = spec.bins;
    if bins < MIN_BINS {
        return Err(CaaError::InvalidSpec(format!("bins must be at least {MIN_BINS}, got {bins}")));
    }
    let n = spec.n_background + spec.n_anomalous;
    if n == 0 {
        return Err(CaaError::InvalidSpec("no rows requested".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let background = Background::new(bins, &mut rng);
    let width = rng.random_range(3..=5usize);
    let start = rng.random_range(2..bins - width - 1);
    let bump_bins: Vec<usize> = (start..start + width).collect();

    let rows: Vec<Vec<f64>> = (0..n).map(|_| background.sample(&mut rng)).collect();
    let sd = bump_stdevs(&rows[..spec.n_background.max(1).min(n)], &bump_bins);

    let mut data = Vec::with_capacity(n * bins);
    let mut labels = Vec::with_capacity(n);
    for (i, mut row) in rows.into_iter().enumerate() {
        let anomalous = i >= spec.n_background;
        if anomalous {
            for (&b, s) in bump_bins.iter().zip(&sd) {
                row[b] = (row[b] + BUMP_SCALE * s).round();
            }
        }
        data.extend(row);
        labels.push(u8::from(anomalous));
    }
    let names = (0..bins).map(|b| format!("bin_{b:03}")).collect();
    Ok(SpectraData {
        dataset: LabeledDataset::new(DenseMatrix::new(n, bins, data)?, labels, names)?,
        bump_bins,
        kind: SYNTHETIC_ANALOG,
    })
}

fn bump_stdevs(rows: &[Vec<f64>], bump: &[usize]) -> Vec<f64> {
    let n = rows.len() as f64;
    bump.iter()
        .map(|&b| {
            let mean = rows.iter().map(|r| r[b]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[b] - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            var.sqrt()
        })
        .collect()
}
