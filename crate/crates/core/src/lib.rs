//! Explainable anomaly detection for surveillance video by late fusion of
//! three per-target branches:
//!
//! * **object**: detector labels checked against a training whitelist,
//! * **action**: recognized actions of K-frame track segments, checked the
//!   same way,
//! * **motion**: histograms of optical-flow magnitude, reconstructed by an
//!   autoencoder and scored by a Gaussian mixture fit on training targets.
//!
//! Each branch is min-max normalized over the whole test set, the weighted
//! maximum is normalized again and thresholded, and every target carries an
//! explanation triple such as `'person', 'riding', 'abnormal motion'`.
//! [`evaluation`] implements the frame-level and 40% pixel-level ROC
//! protocols with AUC and EER.

pub mod action;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod fusion;
pub mod io;
pub mod motion;
pub mod normalize;
pub mod object;
pub mod pipeline;
pub mod rng;
pub mod types;
pub mod whitelist;

pub use config::{PipelineConfig, Preset};
pub use error::{Error, ErrorKind, Result};
pub use normalize::{min_max_invert_normalize, min_max_normalize};
pub use types::*;
