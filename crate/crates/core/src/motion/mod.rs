//! Motion branch: HMOF features, autoencoder reconstruction and GMM scoring.

pub mod autoencoder;
pub mod gmm;
pub mod hmof;
pub mod persist;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::min_max_invert_normalize;
use crate::types::TargetRef;
use crate::whitelist::ScoredTarget;

pub use autoencoder::{
    train_autoencoder, Activation, AutoencoderConfig, AutoencoderModel, TrainedAutoencoder,
};
pub use gmm::{fit_gmm, gmm_log_likelihood, GmmConfig, GmmFit, GmmModel};
pub use hmof::{compute_hmof, HmofConfig, HmofFeature};

/// Which representation of an HMOF feature the mixture is fit on and scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSpace {
    Raw,
    #[default]
    Reconstructed,
    Latent,
}

/// Frozen autoencoder + mixture pair used to score test features.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionModel {
    pub feature_space: FeatureSpace,
    pub autoencoder: AutoencoderModel,
    pub gmm: GmmModel,
}

impl MotionModel {
    pub fn project(&self, feature: &[f64]) -> Result<Vec<f64>> {
        project(self.feature_space, &self.autoencoder, feature)
    }

    /// Raw motion score: mixture log-likelihood of the projected feature.
    pub fn log_likelihood(&self, feature: &[f64]) -> Result<f64> {
        self.gmm.log_likelihood(&self.project(feature)?)
    }
}

fn project(space: FeatureSpace, ae: &AutoencoderModel, feature: &[f64]) -> Result<Vec<f64>> {
    match space {
        FeatureSpace::Raw => {
            if feature.len() != ae.input_width() {
                return Err(Error::WidthMismatch {
                    expected: ae.input_width(),
                    actual: feature.len(),
                });
            }
            Ok(feature.to_vec())
        }
        FeatureSpace::Reconstructed => ae.reconstruct(feature),
        FeatureSpace::Latent => ae.encode(feature),
    }
}

/// Training diagnostics kept alongside a [`MotionModel`].
#[derive(Debug, Clone)]
pub struct MotionTraining {
    pub model: MotionModel,
    pub ae_loss: Vec<f64>,
    pub gmm_log_likelihood: Vec<f64>,
}

/// Fits the autoencoder on training HMOF features, then the mixture on their
/// projections.
pub fn train_motion_model(
    features: &[Vec<f64>],
    space: FeatureSpace,
    ae_cfg: &AutoencoderConfig,
    gmm_cfg: &GmmConfig,
) -> Result<MotionTraining> {
    let trained = train_autoencoder(features, ae_cfg)?;
    let projected = features
        .iter()
        .map(|f| project(space, &trained.model, f))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_gmm(&projected, gmm_cfg)?;
    Ok(MotionTraining {
        model: MotionModel {
            feature_space: space,
            autoencoder: trained.model,
            gmm: fit.model,
        },
        ae_loss: trained.loss_history,
        gmm_log_likelihood: fit.log_likelihood,
    })
}

/// Low likelihood maps to a normalized score near 1.
pub fn score_motion_batch(
    test: &[(TargetRef, Vec<f64>)],
    model: &MotionModel,
) -> Result<Vec<ScoredTarget>> {
    let raw = test
        .iter()
        .map(|(_, f)| model.log_likelihood(f))
        .collect::<Result<Vec<_>>>()?;
    let normalized = min_max_invert_normalize(&raw)?;
    Ok(test
        .iter()
        .zip(raw)
        .zip(normalized)
        .map(|(((target, _), raw), normalized)| ScoredTarget {
            target: *target,
            raw,
            normalized,
        })
        .collect())
}

/// Same as [`score_motion_batch`] but from precomputed raw log-likelihoods.
pub fn normalize_motion_scores(raw: &[(TargetRef, f64)]) -> Result<Vec<ScoredTarget>> {
    let values: Vec<f64> = raw.iter().map(|&(_, r)| r).collect();
    let normalized = min_max_invert_normalize(&values)?;
    Ok(raw
        .iter()
        .zip(normalized)
        .map(|(&(target, raw), normalized)| ScoredTarget {
            target,
            raw,
            normalized,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::TargetId;

    fn tref(id: u64) -> TargetRef {
        TargetRef {
            frame_index: 0,
            target_id: TargetId(id),
        }
    }

    #[test]
    fn inversion_of_likelihoods() {
        let out = normalize_motion_scores(&[(tref(0), -1.0), (tref(1), -10.0)]).unwrap();
        assert_eq!(out[0].normalized, 0.0);
        assert_eq!(out[1].normalized, 1.0);
        let out = normalize_motion_scores(&[(tref(0), -1.0), (tref(1), -1.0)]).unwrap();
        assert!(out.iter().all(|s| s.normalized == 0.5));
    }

    #[test]
    fn outlier_gets_top_score() {
        let cluster: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![0.5 + 0.01 * (i % 5) as f64, 0.5 - 0.01 * (i % 3) as f64])
            .collect();
        let model = MotionModel {
            feature_space: FeatureSpace::Raw,
            autoencoder: AutoencoderModel::identity(2),
            gmm: fit_gmm(
                &cluster,
                &GmmConfig {
                    k: 1,
                    ..GmmConfig::default()
                },
            )
            .unwrap()
            .model,
        };
        let test = vec![
            (tref(0), vec![0.51, 0.49]),
            (tref(1), vec![0.52, 0.5]),
            (tref(2), vec![5.0, -3.0]),
        ];
        let out = score_motion_batch(&test, &model).unwrap();
        assert_eq!(out[2].normalized, 1.0);
        assert!(out[0].normalized < 0.01 && out[1].normalized < 0.01);
    }
}
