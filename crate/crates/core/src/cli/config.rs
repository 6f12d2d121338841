use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detect::Aggregation;
use crate::error::{CaaError, Result};
use crate::model::CaaConfig;

/// Flat run configuration shared by every subcommand. Values come from an
/// optional TOML file and are overridden by command-line flags; keys a
/// command does not use are ignored by it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_pairs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_grid_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sparseness_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_correlation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support_split_fallback: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregation: Option<Aggregation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_pca: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_background: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_anomalous: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),+ $(,)?) => {
        RunConfig { $($field: $top.$field.or($base.$field)),+ }
    };
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CaaError::InvalidConfig(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CaaError::io(path, e))?;
        RunConfig::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CaaError::Format(e.to_string()))
    }

    /// Fields set in `top` win over fields set in `self`.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        overlay!(
            self,
            top,
            data,
            model,
            scores,
            out,
            seed,
            c1,
            c2,
            max_pairs,
            lambda_grid_size,
            sparseness_tol,
            min_correlation,
            max_iter,
            tol,
            support_split_fallback,
            aggregation,
            k_pca,
            threshold,
            row,
            n,
            m,
            n_background,
            n_anomalous,
            bins,
        )
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn caa_config(&self) -> CaaConfig {
        let d = CaaConfig::default();
        CaaConfig {
            c1: self.c1,
            c2: self.c2,
            max_pairs: self.max_pairs,
            lambda_grid_size: self.lambda_grid_size.unwrap_or(d.lambda_grid_size),
            sparseness_tol: self.sparseness_tol.unwrap_or(d.sparseness_tol),
            min_correlation: self.min_correlation.unwrap_or(d.min_correlation),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            tol: self.tol.unwrap_or(d.tol),
            support_split_fallback: self.support_split_fallback.unwrap_or(d.support_split_fallback),
        }
    }

    pub fn aggregation(&self) -> Aggregation {
        self.aggregation.unwrap_or_default()
    }
}
