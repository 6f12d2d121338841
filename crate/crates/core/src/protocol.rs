//! End-to-end evaluation protocols shared by the `repro` command and the
//! acceptance tests.

use serde::{Deserialize, Serialize};

use crate::data::{gen_spectra, holdout_indices, LabeledDataset, SpectraSpec, SYNTHETIC_ANALOG};
use crate::detect::{
    attribute_batch, auc, cross_validate_10fold, roc_auc, AucReport, CaaDetector, CvReport, DetectorKind,
    PcaDetector,
};
use crate::error::{CaaError, Result};
use crate::model::CaaConfig;

/// Share of normal rows used for training in the holdout protocols.
pub const TRAIN_FRACTION: f64 = 0.7;

/// Closed interval a reported value must fall in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Band { lo, hi }
    }

    pub const fn at_least(lo: f64) -> Self {
        Band { lo, hi: f64::INFINITY }
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.lo && value <= self.hi
    }
}

impl std::fmt::Display for Band {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.hi.is_infinite() {
            write!(f, ">= {}", self.lo)
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

pub const CAA_AUC_BAND: Band = Band::at_least(0.93);
pub const PCA_AUC_BAND: Band = Band::new(0.58, 0.85);
/// Mean 10-fold accuracy, in percent.
pub const CAA_CV_BAND: Band = Band::new(91.2, 98.0);
pub const PCA_CV_BAND: Band = Band::new(61.0, 79.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub band: Band,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, value: f64, band: Band) -> Self {
        Check {
            name: name.to_string(),
            value,
            band,
            pass: band.contains(value),
        }
    }
}

/// Train/test row indices for single-class evaluation: a seeded share of the
/// normal rows trains, the remaining normal rows and every anomalous row test.
pub fn single_class_split(labels: &[u8], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let normal: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    let (tr, te) = holdout_indices(normal.len(), fraction, seed)?;
    let train: Vec<usize> = tr.iter().map(|&i| normal[i]).collect();
    let mut test: Vec<usize> = te.iter().map(|&i| normal[i]).collect();
    test.extend((0..labels.len()).filter(|&i| labels[i] != 0));
    if train.is_empty() || test.is_empty() {
        return Err(CaaError::InsufficientData("holdout split leaves an empty side".into()));
    }
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutAuc {
    pub caa: AucReport,
    pub pca: AucReport,
    pub caa_pairs: usize,
    pub pca_components: usize,
    pub n_train: usize,
    pub n_test: usize,
}

/// CAA and PCA AUC (with bootstrap intervals) on a single-class holdout split.
pub fn holdout_auc(ds: &LabeledDataset, seed: u64, cfg: &CaaConfig, k_pca: Option<usize>) -> Result<HoldoutAuc> {
    let (train, test) = single_class_split(&ds.labels, TRAIN_FRACTION, seed)?;
    let x_train = ds.x.select_rows(&train)?;
    let x_test = ds.x.select_rows(&test)?;
    let labels: Vec<u8> = test.iter().map(|&i| ds.labels[i]).collect();
    let caa = CaaDetector::fit(&x_train, cfg)?;
    let pca = PcaDetector::fit(&x_train, k_pca)?;
    Ok(HoldoutAuc {
        caa: roc_auc(&caa.scores(&x_test)?, &labels)?,
        pca: roc_auc(&pca.scores(&x_test)?, &labels)?,
        caa_pairs: caa.num_pairs(),
        pca_components: pca.k(),
        n_train: train.len(),
        n_test: test.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreastCancerReport {
    pub seed: u64,
    pub holdout: HoldoutAuc,
    pub cv_caa: CvReport,
    pub cv_pca: CvReport,
}

impl BreastCancerReport {
    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check::new("caa_auc", self.holdout.caa.auc, CAA_AUC_BAND),
            Check::new("pca_auc", self.holdout.pca.auc, PCA_AUC_BAND),
            Check::new("caa_cv_accuracy_pct", 100.0 * self.cv_caa.mean_accuracy, CAA_CV_BAND),
            Check::new("pca_cv_accuracy_pct", 100.0 * self.cv_pca.mean_accuracy, PCA_CV_BAND),
        ]
    }
}

/// Holdout AUC plus stratified 10-fold accuracy for both detectors.
pub fn breast_cancer(ds: &LabeledDataset, seed: u64, cfg: &CaaConfig, k_pca: Option<usize>) -> Result<BreastCancerReport> {
    Ok(BreastCancerReport {
        seed,
        holdout: holdout_auc(ds, seed, cfg, k_pca)?,
        cv_caa: cross_validate_10fold(&ds.x, &ds.labels, seed, &DetectorKind::Caa(cfg.clone()))?,
        cv_pca: cross_validate_10fold(&ds.x, &ds.labels, seed, &DetectorKind::Pca(k_pca))?,
    })
}

/// CAA configuration used for the spectra protocol: the tightest L1 caps, so
/// that every pair names exactly one bin per side and attributions stay
/// local.
pub fn spectra_caa_config() -> CaaConfig {
    CaaConfig {
        c1: Some(1.0),
        c2: Some(1.0),
        ..CaaConfig::default()
    }
}

pub const ATTRIBUTION_FLOOR: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraReport {
    pub kind: String,
    pub seed: u64,
    pub bump_bins: Vec<usize>,
    pub caa_auc: f64,
    pub pca_auc: f64,
    pub caa_pairs: usize,
    pub pca_components: usize,
    pub all_finite: bool,
    /// Share of attribution counts over anomalous test rows that falls on
    /// the bump bins widened by one bin on each side.
    pub bump_attribution: f64,
}

impl SpectraReport {
    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check::new("caa_minus_pca_auc", self.caa_auc - self.pca_auc, Band::at_least(f64::MIN_POSITIVE)),
            Check::new("finite_scores", f64::from(u8::from(self.all_finite)), Band::new(1.0, 1.0)),
            Check::new("bump_attribution", self.bump_attribution, Band::new(ATTRIBUTION_FLOOR, 1.0)),
        ]
    }
}

/// Generates a synthetic-analog spectra set, trains both detectors on a
/// share of the background rows and evaluates on the rest plus every
/// anomalous row.
pub fn spectra(spec: &SpectraSpec, cfg: &CaaConfig, k_pca: Option<usize>) -> Result<SpectraReport> {
    let data = gen_spectra(spec)?;
    let ds = &data.dataset;
    let (train, test) = single_class_split(&ds.labels, TRAIN_FRACTION, spec.seed)?;
    let x_train = ds.x.select_rows(&train)?;
    let x_test = ds.x.select_rows(&test)?;
    let labels: Vec<u8> = test.iter().map(|&i| ds.labels[i]).collect();
    let caa = CaaDetector::fit(&x_train, cfg)?;
    let pca = PcaDetector::fit(&x_train, k_pca)?;
    let caa_scores = caa.scores(&x_test)?;
    let pca_scores = pca.scores(&x_test)?;
    let anomalous: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let counts = attribute_batch(&x_test, &caa, &anomalous)?;
    let lo = data.bump_bins[0].saturating_sub(1);
    let hi = data.bump_bins[data.bump_bins.len() - 1] + 1;
    let total: u64 = counts.iter().sum();
    let on_bump: u64 = counts
        .iter()
        .enumerate()
        .filter(|(b, _)| (lo..=hi).contains(b))
        .map(|(_, c)| c)
        .sum();
    Ok(SpectraReport {
        kind: SYNTHETIC_ANALOG.to_string(),
        seed: spec.seed,
        bump_attribution: if total == 0 { 0.0 } else { on_bump as f64 / total as f64 },
        caa_auc: auc(&caa_scores, &labels)?,
        pca_auc: auc(&pca_scores, &labels)?,
        caa_pairs: caa.num_pairs(),
        pca_components: pca.k(),
        all_finite: caa_scores.iter().chain(&pca_scores).all(|s| s.is_finite()),
        bump_bins: data.bump_bins,
    })
}
