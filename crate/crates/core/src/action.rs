//! Action branch: scoring from per-segment action recognition records.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::types::TrackSegment;
use crate::whitelist::{normalize_batch, ScoredTarget, Vocabulary};

/// Action categories observed in training above the action confidence threshold.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActionList(pub Vocabulary);

impl Deref for ActionList {
    type Target = Vocabulary;

    fn deref(&self) -> &Vocabulary {
        &self.0
    }
}

pub fn build_action_list(training: &[TrackSegment], beta: f64) -> Result<ActionList> {
    Vocabulary::build(
        training.iter().map(|s| (s.act_label.as_str(), s.act_conf)),
        beta,
    )
    .map(ActionList)
}

pub fn score_action_raw(segment: &TrackSegment, list: &ActionList) -> f64 {
    list.signed_score(&segment.act_label, segment.act_conf)
}

/// One normalized score per segment, attributed to the segment's last frame.
pub fn score_action_batch(test: &[TrackSegment], list: &ActionList) -> Result<Vec<ScoredTarget>> {
    let raw = test
        .iter()
        .map(|s| {
            let target = s.target_ref().ok_or_else(|| {
                Error::InvalidArgument(format!("track segment for target {} is empty", s.target_id))
            })?;
            Ok((target, score_action_raw(s, list)))
        })
        .collect::<Result<Vec<_>>>()?;
    normalize_batch(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{BBox, TargetId, TrackedBox};

    fn seg(id: u64, label: &str, conf: f64) -> TrackSegment {
        TrackSegment {
            target_id: TargetId(id),
            frames: (3..8)
                .map(|f| TrackedBox {
                    frame_index: f,
                    bbox: BBox::new(0, 0, 2, 2),
                })
                .collect(),
            act_label: label.into(),
            act_conf: conf,
        }
    }

    #[test]
    fn action_list_uses_strict_threshold() {
        let list =
            build_action_list(&[seg(0, "walking", 0.995), seg(1, "riding", 0.90)], 0.99).unwrap();
        assert_eq!(list.iter().collect::<Vec<_>>(), vec!["walking"]);
        assert!(build_action_list(&[seg(0, "walking", 0.99)], 0.99)
            .unwrap()
            .is_empty());
        assert!(build_action_list(&[], 0.99).unwrap().is_empty());
    }

    #[test]
    fn raw_score_arms() {
        let list = ActionList(Vocabulary::from_labels(["walking"]));
        assert_eq!(score_action_raw(&seg(0, "walking", 0.98), &list), -0.98);
        assert_eq!(score_action_raw(&seg(0, "riding", 0.85), &list), 0.85);
        assert_eq!(
            score_action_raw(&seg(0, "riding", 0.0), &ActionList::default()),
            0.0
        );
    }

    #[test]
    fn batch_attributes_to_last_frame() {
        let list = ActionList(Vocabulary::from_labels(["walking"]));
        let out = score_action_batch(
            &[
                seg(0, "walking", 0.98),
                seg(1, "sitting", 0.0),
                seg(2, "riding", 0.85),
            ],
            &list,
        )
        .unwrap();
        assert_eq!(out[0].normalized, 0.0);
        assert!((out[1].normalized - 0.5355).abs() < 1e-4);
        assert_eq!(out[2].normalized, 1.0);
        assert!(out.iter().all(|s| s.target.frame_index == 7));

        let single = score_action_batch(&[seg(0, "riding", 0.4)], &list).unwrap();
        assert_eq!(single[0].normalized, 0.5);
    }

    #[test]
    fn segment_validation() {
        let mut s = seg(0, "walking", 0.9);
        assert!(s.validate(5).is_ok());
        assert!(s.validate(4).is_err());
        s.frames[2].frame_index = 9;
        assert!(s.validate(5).is_err());
    }
}
