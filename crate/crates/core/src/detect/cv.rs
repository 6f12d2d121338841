use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detect::detector::CaaDetector;
use crate::detect::eval::{accuracy_at, threshold_by_accuracy};
use crate::detect::pca::PcaDetector;
use crate::error::{CaaError, Result};
use crate::matrix::DenseMatrix;
use crate::model::CaaConfig;

pub const FOLDS: usize = 10;

/// Scores arbitrary rows with a fitted detector.
pub type Scorer = Box<dyn Fn(&DenseMatrix) -> Result<Vec<f64>>>;

/// Which single-class detector a cross-validation run fits.
#[derive(Debug, Clone, PartialEq)]
pub enum DetectorKind {
    Caa(CaaConfig),
    /// `None` selects `k` by the 95% variance rule.
    Pca(Option<usize>),
}

impl DetectorKind {
    /// Fits on `train` and returns a scorer for arbitrary rows.
    pub fn fit(&self, train: &DenseMatrix) -> Result<Scorer> {
        match self {
            DetectorKind::Caa(cfg) => {
                let d = CaaDetector::fit(train, cfg)?;
                Ok(Box::new(move |x| d.scores(x)))
            }
            DetectorKind::Pca(k) => {
                let d = PcaDetector::fit(train, *k)?;
                Ok(Box::new(move |x| d.scores(x)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub fold_accuracies: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub mean_accuracy: f64,
    /// Sample standard deviation across folds.
    pub stdev: f64,
}

/// Assigns every row to one of `k` folds, shuffling each class separately so
/// per-class fold sizes differ by at most one.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; labels.len()];
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> = (0..labels.len())
            .filter(|&i| u8::from(labels[i] != 0) == class)
            .collect();
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            fold[i] = pos % k;
        }
    }
    fold
}

/// Stratified 10-fold protocol: each fold trains on the normal rows of the
/// other nine folds, picks the accuracy-maximizing threshold on all training
/// rows and reports accuracy on the held-out fold.
pub fn cross_validate_10fold(x: &DenseMatrix, labels: &[u8], seed: u64, kind: &DetectorKind) -> Result<CvReport> {
    cross_validate(x, labels, FOLDS, seed, kind)
}

pub fn cross_validate(x: &DenseMatrix, labels: &[u8], k: usize, seed: u64, kind: &DetectorKind) -> Result<CvReport> {
    if labels.len() != x.rows() {
        return Err(CaaError::DimensionMismatch {
            expected: x.rows(),
            found: labels.len(),
        });
    }
    if k < 2 {
        return Err(CaaError::InvalidArgument("need at least two folds".into()));
    }
    let pos = labels.iter().filter(|&&l| l != 0).count();
    let neg = labels.len() - pos;
    if pos < k || neg < k {
        return Err(CaaError::InsufficientData(format!(
            "{k}-fold cross-validation needs at least {k} rows per class, got {neg} normal and {pos} anomalous"
        )));
    }
    let fold = stratified_folds(labels, k, seed);
    let mut accs = Vec::with_capacity(k);
    let mut thresholds = Vec::with_capacity(k);
    for f in 0..k {
        let train: Vec<usize> = (0..x.rows()).filter(|&i| fold[i] != f).collect();
        let test: Vec<usize> = (0..x.rows()).filter(|&i| fold[i] == f).collect();
        let normal: Vec<usize> = train.iter().copied().filter(|&i| labels[i] == 0).collect();
        let scorer = kind.fit(&x.select_rows(&normal)?)?;

        let train_scores = scorer(&x.select_rows(&train)?)?;
        let train_labels: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
        let (threshold, _) = threshold_by_accuracy(&train_scores, &train_labels)?;

        let test_scores = scorer(&x.select_rows(&test)?)?;
        let test_labels: Vec<u8> = test.iter().map(|&i| labels[i]).collect();
        accs.push(accuracy_at(&test_scores, &test_labels, threshold));
        thresholds.push(threshold);
    }
    let mean = accs.iter().sum::<f64>() / k as f64;
    let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    Ok(CvReport {
        fold_accuracies: accs,
        thresholds,
        mean_accuracy: mean,
        stdev: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_balanced_per_class() {
        let labels: Vec<u8> = (0..137).map(|i| u8::from(i % 3 == 0)).collect();
        let fold = stratified_folds(&labels, 10, 4);
        for class in [0u8, 1] {
            let mut sizes = [0usize; 10];
            for (i, &f) in fold.iter().enumerate() {
                if labels[i] == class {
                    sizes[f] += 1;
                }
            }
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            assert!(hi - lo <= 1, "class {class}: {sizes:?}");
        }
    }

    #[test]
    fn folds_are_seeded() {
        let labels: Vec<u8> = (0..50).map(|i| u8::from(i % 4 == 0)).collect();
        assert_eq!(stratified_folds(&labels, 10, 9), stratified_folds(&labels, 10, 9));
        assert_ne!(stratified_folds(&labels, 10, 9), stratified_folds(&labels, 10, 10));
    }

    #[test]
    fn too_few_rows_per_class() {
        let x = DenseMatrix::zeros(15, 2);
        let labels: Vec<u8> = (0..15).map(|i| u8::from(i < 5)).collect();
        assert!(matches!(
            cross_validate_10fold(&x, &labels, 0, &DetectorKind::Pca(Some(1))),
            Err(CaaError::InsufficientData(_))
        ));
    }
}
