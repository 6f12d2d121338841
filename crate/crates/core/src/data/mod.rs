//! Dataset generation and ingestion.

pub mod dataset;
pub mod planted;
pub mod spectra;
pub mod split;
pub mod wisconsin;

pub use dataset::LabeledDataset;
pub use planted::{gen_planted, PlantedData, PlantedSpec};
pub use spectra::{gen_spectra, SpectraData, SpectraSpec, DEFAULT_BINS, SYNTHETIC_ANALOG};
pub use split::{holdout_indices, split_holdout};
pub use wisconsin::{load_wisconsin, parse_wisconsin, WISCONSIN_FEATURES};
