//! On-disk formats: datasets, flow and mask files, and pipeline outputs.

pub mod binary;
pub mod dataset;
pub mod flow;
pub mod pgm;
pub mod results;
pub mod synthetic;

pub use dataset::{load_dataset, save_dataset, Dataset, Split};
pub use synthetic::{generate_synthetic, AnomalyKind, SyntheticSceneConfig};
