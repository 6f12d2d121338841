use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CaaError, Result};
use crate::matrix::DenseMatrix;

/// Seeded permutation of `0..n` cut after `ceil(fraction * n)` entries.
pub fn holdout_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CaaError::InvalidArgument(format!(
            "holdout fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // guard against 0.7 * 200 landing a hair above 140
    let cut = ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let test = idx.split_off(cut.min(n));
    Ok((idx, test))
}

pub fn split_holdout(x: &DenseMatrix, fraction: f64, seed: u64) -> Result<(DenseMatrix, DenseMatrix)> {
    let (train, test) = holdout_indices(x.rows(), fraction, seed)?;
    if train.is_empty() || test.is_empty() {
        return Err(CaaError::InsufficientData(format!(
            "holdout split of {} rows at fraction {fraction} leaves an empty side",
            x.rows()
        )));
    }
    Ok((x.select_rows(&train)?, x.select_rows(&test)?))
}
