//! Canonical autocorrelation analysis for single-class anomaly detection.
//!
//! The crate finds sparse pairs of feature combinations that are strongly
//! correlated within normal data, models each pair's 2-D projection with a
//! Gaussian, and flags rows that fall far from any of them. The supports of
//! the responsible pair tell which features triggered the flag.

pub mod cli;
pub mod data;
pub mod detect;
pub mod error;
pub mod matrix;
pub mod model;
pub mod protocol;
pub mod sparse_cca;

pub use error::{CaaError, Result};
pub use matrix::DenseMatrix;
pub use model::{fit_caa, CaaConfig, CanonicalPair};
