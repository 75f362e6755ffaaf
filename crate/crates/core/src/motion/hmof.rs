//! Histogram of optical-flow magnitudes over a target box.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{BBox, FlowField};

/// `n_bins` uniform bins on `[0, magnitude_cap)` plus one overflow bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HmofConfig {
    pub n_bins: usize,
    pub magnitude_cap: f64,
}

impl HmofConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bins < 2 {
            return Err(Error::Config(format!(
                "hmof.n_bins must be at least 2, got {}",
                self.n_bins
            )));
        }
        if !(self.magnitude_cap > 0.0 && self.magnitude_cap.is_finite()) {
            return Err(Error::Config(format!(
                "hmof.magnitude_cap must be positive, got {}",
                self.magnitude_cap
            )));
        }
        Ok(())
    }

    /// Length of the feature vector (`n_bins + 1`).
    pub fn feature_len(&self) -> usize {
        self.n_bins + 1
    }

    pub fn bin_width(&self) -> f64 {
        self.magnitude_cap / self.n_bins as f64
    }

    pub fn bin_of(&self, magnitude: f64) -> usize {
        if magnitude >= self.magnitude_cap {
            return self.n_bins;
        }
        // Rounding can push values just below the cap onto index n_bins.
        ((magnitude / self.bin_width()).floor() as usize).min(self.n_bins - 1)
    }
}

/// Count-normalized magnitude histogram, `n_bins + 1` entries summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmofFeature {
    pub bins: Vec<f64>,
}

pub fn compute_hmof(flow: &FlowField, bbox: BBox, cfg: &HmofConfig) -> Result<HmofFeature> {
    cfg.validate()?;
    bbox.check_within(flow.width(), flow.height())?;
    let mut counts = vec![0u64; cfg.feature_len()];
    for y in bbox.y..bbox.y + bbox.h {
        for x in bbox.x..bbox.x + bbox.w {
            let [u, v] = flow.get(x, y);
            let (u, v) = (f64::from(u), f64::from(v));
            counts[cfg.bin_of((u * u + v * v).sqrt())] += 1;
        }
    }
    let total = bbox.area() as f64;
    Ok(HmofFeature {
        bins: counts.into_iter().map(|c| c as f64 / total).collect(),
    })
}
