//! Single-class anomaly detection on canonical projections, the PCA residual
//! baseline, and the evaluation protocol used to compare them.

pub mod cv;
pub mod detector;
pub mod eval;
pub mod gaussian;
pub mod pca;

pub use cv::{cross_validate, cross_validate_10fold, stratified_folds, CvReport, DetectorKind};
pub use detector::{attribute_batch, Aggregation, CaaDetector, ScoreReport, FORMAT_VERSION};
pub use eval::{auc, roc_auc, roc_auc_with, threshold_by_accuracy, AucReport, Confusion};
pub use gaussian::{fit_gaussians, mahalanobis, GaussianChar};
pub use pca::{fit_pca_detector, score_pca, PcaDetector};
