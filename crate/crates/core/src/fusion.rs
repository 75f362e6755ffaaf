//! Weighted-max late fusion, batch normalization, threshold decision and
//! explanation triples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::min_max_normalize;
use crate::types::{
    BranchScores, Decision, Detection, Explanation, FusedScore, MotionFlag, TargetRef, TrackSegment,
};

pub const UNKNOWN_ACTION: &str = "unknown-action";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchWeights {
    pub obj: f64,
    pub act: f64,
    pub mot: f64,
}

impl BranchWeights {
    pub const fn uniform(w: f64) -> Self {
        BranchWeights {
            obj: w,
            act: w,
            mot: w,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        BranchWeights {
            obj: self.obj * factor,
            act: self.act * factor,
            mot: self.mot * factor,
        }
    }
}

/// How a branch with no score for a target enters the max.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingBranchPolicy {
    /// Excluded from the max.
    #[default]
    Ignore,
    /// Contributes a score of zero.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionConfig {
    pub weights: BranchWeights,
    pub decision_threshold: f64,
    #[serde(default)]
    pub missing_branch: MissingBranchPolicy,
    pub motion_flag_threshold: f64,
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        let w = [self.weights.obj, self.weights.act, self.weights.mot];
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config(format!(
                "fusion weights must be non-negative, got {w:?}"
            )));
        }
        if w.iter().all(|&v| v == 0.0) {
            return Err(Error::Config("fusion weights must not all be zero".into()));
        }
        for (name, t) in [
            ("decision_threshold", self.decision_threshold),
            ("motion_flag_threshold", self.motion_flag_threshold),
        ] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Config(format!(
                    "fusion.{name} must lie in [0, 1], got {t}"
                )));
            }
        }
        Ok(())
    }
}

/// Max over present branches of `weight * normalized score`.
pub fn fuse_raw(scores: &BranchScores, cfg: &FusionConfig) -> Result<f64> {
    let w = cfg.weights;
    let branches = [
        (scores.sco_obj, w.obj),
        (scores.sco_act, w.act),
        (scores.sco_mot, w.mot),
    ];
    if branches.iter().all(|(s, _)| s.is_none()) {
        return Err(Error::NoBranchScores);
    }
    let fused = branches
        .iter()
        .filter_map(|&(s, weight)| match (s, cfg.missing_branch) {
            (Some(v), _) => Some(weight * v.normalized),
            (None, MissingBranchPolicy::Zero) => Some(0.0),
            (None, MissingBranchPolicy::Ignore) => None,
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(fused)
}

/// Fused score of one target before explanations are attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusedValue {
    pub target: TargetRef,
    pub raw: f64,
    pub normalized: f64,
    pub decision: Decision,
}

impl FusedValue {
    pub fn with_explanation(self, explanation: Explanation) -> FusedScore {
        FusedScore {
            target_id: self.target.target_id,
            frame_index: self.target.frame_index,
            raw: self.raw,
            normalized: self.normalized,
            decision: self.decision,
            explanation,
        }
    }
}

pub fn decide(normalized: f64, threshold: f64) -> Decision {
    if normalized > threshold {
        Decision::Abnormal
    } else {
        Decision::Normal
    }
}

/// Fuses every target, normalizes over the whole batch and thresholds.
pub fn fuse_batch(all: &[BranchScores], cfg: &FusionConfig) -> Result<Vec<FusedValue>> {
    cfg.validate()?;
    let raw = all
        .iter()
        .map(|s| fuse_raw(s, cfg))
        .collect::<Result<Vec<_>>>()?;
    let normalized = min_max_normalize(&raw)?;
    Ok(all
        .iter()
        .zip(raw)
        .zip(normalized)
        .map(|((s, raw), normalized)| FusedValue {
            target: s.target_ref(),
            raw,
            normalized,
            decision: decide(normalized, cfg.decision_threshold),
        })
        .collect())
}

pub fn explain(
    detection: &Detection,
    segment: Option<&TrackSegment>,
    motion_normalized: Option<f64>,
    flag_threshold: f64,
) -> Explanation {
    let motion = match motion_normalized {
        Some(m) if m > flag_threshold => MotionFlag::Abnormal,
        _ => MotionFlag::Normal,
    };
    Explanation {
        obj_label: detection.obj_label.clone(),
        act_label: segment.map_or_else(|| UNKNOWN_ACTION.to_owned(), |s| s.act_label.clone()),
        motion,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{BBox, BranchValue, TargetId, TrackedBox};

    fn scores(obj: Option<f64>, act: Option<f64>, mot: Option<f64>) -> BranchScores {
        let v = |x: Option<f64>| {
            x.map(|n| BranchValue {
                raw: n,
                normalized: n,
            })
        };
        BranchScores {
            target_id: TargetId(0),
            frame_index: 0,
            sco_obj: v(obj),
            sco_act: v(act),
            sco_mot: v(mot),
        }
    }

    fn cfg(w: BranchWeights, threshold: f64) -> FusionConfig {
        FusionConfig {
            weights: w,
            decision_threshold: threshold,
            missing_branch: MissingBranchPolicy::Ignore,
            motion_flag_threshold: 0.5,
        }
    }

    #[test]
    fn weighted_max() {
        let c = cfg(BranchWeights::uniform(1.0), 0.5);
        assert_eq!(
            fuse_raw(&scores(Some(0.2), Some(0.9), Some(0.1)), &c).unwrap(),
            0.9
        );
        let umn = cfg(
            BranchWeights {
                obj: 1.0,
                act: 1.5,
                mot: 1.5,
            },
            0.5,
        );
        let fused = fuse_raw(&scores(Some(0.6), Some(0.4), Some(0.5)), &umn).unwrap();
        assert!((fused - 0.75).abs() < 1e-15);
        assert_eq!(fuse_raw(&scores(Some(0.8), None, None), &c).unwrap(), 0.8);
    }

    #[test]
    fn missing_everything_is_an_error() {
        let c = cfg(BranchWeights::uniform(1.0), 0.5);
        let err = fuse_raw(&scores(None, None, None), &c).unwrap_err();
        assert_eq!(err.to_string(), "no branch scores");
    }

    #[test]
    fn zero_policy_only_matters_for_zero_weights() {
        let mut c = cfg(
            BranchWeights {
                obj: 0.0,
                act: 1.0,
                mot: 1.0,
            },
            0.5,
        );
        let s = scores(Some(0.4), None, None);
        assert_eq!(fuse_raw(&s, &c).unwrap(), 0.0);
        c.missing_branch = MissingBranchPolicy::Zero;
        assert_eq!(fuse_raw(&s, &c).unwrap(), 0.0);
        let s = scores(Some(0.4), None, Some(0.2));
        assert_eq!(fuse_raw(&s, &c).unwrap(), 0.2);
    }

    #[test]
    fn batch_decisions() {
        let c = cfg(BranchWeights::uniform(1.0), 0.45);
        let all = [
            scores(Some(0.9), None, None),
            scores(Some(0.3), None, None),
            scores(Some(0.6), None, None),
        ];
        let out = fuse_batch(&all, &c).unwrap();
        let norm: Vec<f64> = out.iter().map(|f| f.normalized).collect();
        assert!((norm[0] - 1.0).abs() < 1e-12 && norm[1] == 0.0 && (norm[2] - 0.5).abs() < 1e-12);
        let d: Vec<Decision> = out.iter().map(|f| f.decision).collect();
        assert_eq!(
            d,
            vec![Decision::Abnormal, Decision::Normal, Decision::Abnormal]
        );

        let single = fuse_batch(
            &[scores(Some(0.9), None, None)],
            &cfg(BranchWeights::uniform(1.0), 0.5),
        )
        .unwrap();
        assert_eq!(single[0].normalized, 0.5);
        assert_eq!(single[0].decision, Decision::Normal);
    }

    #[test]
    fn explanation_triples() {
        let det = |label: &str| Detection {
            frame_index: 4,
            target_id: TargetId(1),
            bbox: BBox::new(0, 0, 2, 2),
            obj_label: label.into(),
            obj_conf: 0.9,
        };
        let seg = |label: &str| TrackSegment {
            target_id: TargetId(1),
            frames: vec![TrackedBox {
                frame_index: 4,
                bbox: BBox::new(0, 0, 2, 2),
            }],
            act_label: label.into(),
            act_conf: 0.9,
        };
        let e = explain(&det("person"), Some(&seg("riding")), Some(0.97), 0.5);
        assert_eq!(e.to_string(), "'person', 'riding', 'abnormal motion'");
        let e = explain(&det("person"), Some(&seg("walking")), Some(0.1), 0.5);
        assert_eq!(e.to_string(), "'person', 'walking', 'normal motion'");
        let e = explain(&det("car"), None, Some(0.9), 0.5);
        assert_eq!(e.to_string(), "'car', 'unknown-action', 'abnormal motion'");
    }

    #[test]
    fn config_validation() {
        assert!(cfg(BranchWeights::uniform(0.0), 0.5).validate().is_err());
        assert!(cfg(BranchWeights::uniform(1.0), 1.5).validate().is_err());
        assert!(cfg(
            BranchWeights {
                obj: -1.0,
                act: 1.0,
                mot: 1.0
            },
            0.5
        )
        .validate()
        .is_err());
    }
}
