use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CaaError, Result};

pub const BOOTSTRAP_RESAMPLES: usize = 1000;
pub const BOOTSTRAP_SEED: u64 = 0x5eed_cafe;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucReport {
    pub auc: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

fn check_labels(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(CaaError::DimensionMismatch {
            expected: scores.len(),
            found: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(CaaError::NonFinite);
    }
    let pos = labels.iter().filter(|&&l| l != 0).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(CaaError::SingleClass);
    }
    Ok((pos, neg))
}

/// Mann-Whitney AUC with average ranks, so tied scores earn half credit.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = check_labels(scores, labels)?;
    Ok(auc_unchecked(scores, labels, pos, neg))
}

fn auc_unchecked(scores: &[f64], labels: &[u8], pos: usize, neg: usize) -> f64 {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks are 1-based; the tie block i..=j shares the mean rank
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if labels[k] != 0 {
                rank_sum_pos += mean_rank;
            }
        }
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n)
}

/// AUC with a percentile bootstrap interval (1000 stratified resamples,
/// 2.5/97.5 percentiles, fixed seed).
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<AucReport> {
    roc_auc_with(scores, labels, BOOTSTRAP_RESAMPLES, BOOTSTRAP_SEED)
}

pub fn roc_auc_with(scores: &[f64], labels: &[u8], resamples: usize, seed: u64) -> Result<AucReport> {
    let (pos, neg) = check_labels(scores, labels)?;
    let point = auc_unchecked(scores, labels, pos, neg);
    if resamples == 0 {
        return Ok(AucReport {
            auc: point,
            ci_low: point,
            ci_high: point,
        });
    }
    let pos_idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != 0).collect();
    let neg_idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Vec::with_capacity(scores.len());
    let mut l = Vec::with_capacity(scores.len());
    let mut stats = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        s.clear();
        l.clear();
        for _ in 0..pos {
            s.push(scores[pos_idx[rng.random_range(0..pos)]]);
            l.push(1);
        }
        for _ in 0..neg {
            s.push(scores[neg_idx[rng.random_range(0..neg)]]);
            l.push(0);
        }
        stats.push(auc_unchecked(&s, &l, pos, neg));
    }
    stats.sort_by(f64::total_cmp);
    Ok(AucReport {
        auc: point,
        ci_low: percentile(&stats, 0.025),
        ci_high: percentile(&stats, 0.975),
    })
}

/// Linear-interpolated percentile of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
}

impl Confusion {
    /// Rows with `score > threshold` are predicted anomalous.
    pub fn at(scores: &[f64], labels: &[u8], threshold: f64) -> Self {
        let mut c = Confusion {
            true_positive: 0,
            false_positive: 0,
            true_negative: 0,
            false_negative: 0,
        };
        for (&s, &l) in scores.iter().zip(labels) {
            match (s > threshold, l != 0) {
                (true, true) => c.true_positive += 1,
                (true, false) => c.false_positive += 1,
                (false, false) => c.true_negative += 1,
                (false, true) => c.false_negative += 1,
            }
        }
        c
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.true_positive + self.false_positive + self.true_negative + self.false_negative;
        (self.true_positive + self.true_negative) as f64 / total as f64
    }
}

pub fn accuracy_at(scores: &[f64], labels: &[u8], threshold: f64) -> f64 {
    Confusion::at(scores, labels, threshold).accuracy()
}

/// Grid search over midpoints between consecutive distinct scores plus the
/// `-inf`/`+inf` sentinels; returns the most accurate threshold (lowest on
/// ties) and its accuracy.
pub fn threshold_by_accuracy(scores: &[f64], labels: &[u8]) -> Result<(f64, f64)> {
    if scores.is_empty() {
        return Err(CaaError::InvalidArgument("no scores to threshold".into()));
    }
    if scores.len() != labels.len() {
        return Err(CaaError::DimensionMismatch {
            expected: scores.len(),
            found: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(CaaError::NonFinite);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sweep thresholds upward: start with everything predicted anomalous and
    // move each block of equal scores to the normal side.
    let total = scores.len() as f64;
    let positives = labels.iter().filter(|&&l| l != 0).count();
    let mut correct = positives;
    let mut best = (f64::NEG_INFINITY, correct);
    let mut i = 0;
    while i < order.len() {
        let value = scores[order[i]];
        let mut j = i;
        while j < order.len() && scores[order[j]] == value {
            if labels[order[j]] != 0 {
                correct -= 1;
            } else {
                correct += 1;
            }
            j += 1;
        }
        let threshold = if j < order.len() {
            0.5 * (value + scores[order[j]])
        } else {
            f64::INFINITY
        };
        if correct > best.1 {
            best = (threshold, correct);
        }
        i = j;
    }
    Ok((best.0, best.1 as f64 / total))
}
