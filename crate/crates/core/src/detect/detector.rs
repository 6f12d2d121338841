use serde::{Deserialize, Serialize};

use crate::detect::gaussian::{fit_gaussians, mahalanobis, GaussianChar};
use crate::error::{CaaError, Result};
use crate::matrix::{dot, standardize, DenseMatrix, StandardizationParams};
use crate::model::{fit_caa, CaaConfig, CanonicalPair};

/// Current version of the serialized detector document.
pub const FORMAT_VERSION: u32 = 1;

/// How per-pair distances are combined into one score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Largest Mahalanobis distance over the pairs.
    #[default]
    Max,
    /// Sum of the distances; flags points that deviate from many pairs.
    Sum,
}

impl std::str::FromStr for Aggregation {
    type Err = CaaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Aggregation::Max),
            "sum" => Ok(Aggregation::Sum),
            other => Err(CaaError::InvalidConfig(format!(
                "unknown aggregation {other:?}, expected max or sum"
            ))),
        }
    }
}

impl std::fmt::Display for Aggregation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Aggregation::Max => "max",
            Aggregation::Sum => "sum",
        })
    }
}

/// Single-class model: standardization, canonical pairs and one Gaussian per
/// pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaaDetector {
    pub standardization: StandardizationParams,
    pub pairs: Vec<CanonicalPair>,
    pub gaussians: Vec<GaussianChar>,
    #[serde(default)]
    pub aggregation: Aggregation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub score: f64,
    pub argmax_index: usize,
    /// `support_u` and `support_v` of the argmax pair.
    pub contributing_features: Vec<usize>,
    pub per_pair_distances: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DetectorDocument {
    format_version: u32,
    kind: String,
    #[serde(flatten)]
    detector: CaaDetector,
}

impl CaaDetector {
    /// Fits on raw training rows assumed to be normal.
    pub fn fit(x: &DenseMatrix, cfg: &CaaConfig) -> Result<Self> {
        let (x_std, standardization) = standardize(x)?;
        let pairs = fit_caa(&x_std, cfg)?;
        if pairs.is_empty() {
            return Err(CaaError::NoPairsFound);
        }
        let gaussians = fit_gaussians(&x_std, &pairs)?;
        Ok(CaaDetector {
            standardization,
            pairs,
            gaussians,
            aggregation: Aggregation::Max,
        })
    }

    pub fn with_aggregation(mut self, aggregation: Aggregation) -> Self {
        self.aggregation = aggregation;
        self
    }

    pub fn num_features(&self) -> usize {
        self.standardization.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// Checks the structural invariants of a detector built elsewhere.
    pub fn validate(&self) -> Result<()> {
        self.standardization.validate()?;
        if self.pairs.is_empty() || self.pairs.len() != self.gaussians.len() {
            return Err(CaaError::Format(format!(
                "detector needs matching nonempty pairs and gaussians, got {} and {}",
                self.pairs.len(),
                self.gaussians.len()
            )));
        }
        let m = self.standardization.len();
        for p in &self.pairs {
            p.validate()?;
            if p.dim() != m {
                return Err(CaaError::Format(format!(
                    "pair dimension {} does not match {m} features",
                    p.dim()
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = DetectorDocument {
            format_version: FORMAT_VERSION,
            kind: "caa_detector".into(),
            detector: self.clone(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| CaaError::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DetectorDocument =
            serde_json::from_str(text).map_err(|e| CaaError::Format(e.to_string()))?;
        if doc.format_version != FORMAT_VERSION {
            return Err(CaaError::Format(format!(
                "unsupported format_version {}",
                doc.format_version
            )));
        }
        if doc.kind != "caa_detector" {
            return Err(CaaError::Format(format!("unexpected kind {:?}", doc.kind)));
        }
        doc.detector.validate()?;
        Ok(doc.detector)
    }

    /// Mahalanobis distance of an already standardized row on every pair.
    pub fn pair_distances(&self, x_std: &[f64]) -> Vec<f64> {
        self.pairs
            .iter()
            .zip(&self.gaussians)
            .map(|(p, g)| mahalanobis([dot(x_std, &p.u), dot(x_std, &p.v)], g))
            .collect()
    }

    /// Scores a raw observation.
    pub fn score(&self, x: &[f64]) -> Result<ScoreReport> {
        let z = self.standardization.apply_row(x)?;
        let dists = self.pair_distances(&z);
        let mut argmax = 0;
        for (i, d) in dists.iter().enumerate() {
            if *d > dists[argmax] {
                argmax = i;
            }
        }
        let score = match self.aggregation {
            Aggregation::Max => dists[argmax],
            Aggregation::Sum => dists.iter().sum(),
        };
        Ok(ScoreReport {
            score,
            argmax_index: argmax,
            contributing_features: self.pairs[argmax].features(),
            per_pair_distances: dists,
        })
    }

    /// Scores every row of a raw matrix.
    pub fn score_rows(&self, x: &DenseMatrix) -> Result<Vec<ScoreReport>> {
        (0..x.rows()).map(|i| self.score(x.row(i))).collect()
    }

    pub fn scores(&self, x: &DenseMatrix) -> Result<Vec<f64>> {
        Ok(self.score_rows(x)?.into_iter().map(|r| r.score).collect())
    }
}

/// Counts, per feature, how often it belongs to the argmax pair of a flagged
/// row.
pub fn attribute_batch(x: &DenseMatrix, detector: &CaaDetector, flagged: &[usize]) -> Result<Vec<u64>> {
    if x.cols() != detector.num_features() {
        return Err(CaaError::DimensionMismatch {
            expected: detector.num_features(),
            found: x.cols(),
        });
    }
    let mut counts = vec![0u64; x.cols()];
    for &i in flagged {
        if i >= x.rows() {
            return Err(CaaError::InvalidArgument(format!(
                "flagged row {i} out of range for {} rows",
                x.rows()
            )));
        }
        for f in detector.score(x.row(i))?.contributing_features {
            counts[f] += 1;
        }
    }
    Ok(counts)
}
