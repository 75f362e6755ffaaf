//! Object branch: appearance-based scoring from detector labels.

use std::ops::Deref;

use crate::error::Result;
use crate::types::Detection;
use crate::whitelist::{normalize_batch, ScoredTarget, Vocabulary};

/// Object labels observed in training above the object confidence threshold.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelList(pub Vocabulary);

impl Deref for LabelList {
    type Target = Vocabulary;

    fn deref(&self) -> &Vocabulary {
        &self.0
    }
}

pub fn build_label_list(training: &[Detection], alpha: f64) -> Result<LabelList> {
    Vocabulary::build(
        training.iter().map(|d| (d.obj_label.as_str(), d.obj_conf)),
        alpha,
    )
    .map(LabelList)
}

pub fn score_object_raw(detection: &Detection, list: &LabelList) -> f64 {
    list.signed_score(&detection.obj_label, detection.obj_conf)
}

/// Raw scores for every test detection, normalized together.
pub fn score_object_batch(test: &[Detection], list: &LabelList) -> Result<Vec<ScoredTarget>> {
    normalize_batch(
        test.iter()
            .map(|d| (d.target_ref(), score_object_raw(d, list)))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{BBox, TargetId};

    fn det(id: u64, label: &str, conf: f64) -> Detection {
        Detection {
            frame_index: 0,
            target_id: TargetId(id),
            bbox: BBox::new(0, 0, 4, 4),
            obj_label: label.into(),
            obj_conf: conf,
        }
    }

    #[test]
    fn label_list_uses_strict_threshold() {
        let list = build_label_list(&[det(0, "person", 0.97), det(1, "car", 0.50)], 0.95).unwrap();
        assert_eq!(list.iter().collect::<Vec<_>>(), vec!["person"]);

        let list = build_label_list(&[det(0, "person", 0.95)], 0.95).unwrap();
        assert!(list.is_empty());

        assert!(build_label_list(&[], 0.95).unwrap().is_empty());
    }

    #[test]
    fn raw_score_arms() {
        let list = LabelList(Vocabulary::from_labels(["person"]));
        assert_eq!(score_object_raw(&det(0, "person", 0.90), &list), -0.90);
        assert_eq!(score_object_raw(&det(0, "cart", 0.80), &list), 0.80);
        assert_eq!(score_object_raw(&det(0, "person", 0.0), &list), 0.0);
    }

    #[test]
    fn batch_normalization() {
        let list = LabelList(Vocabulary::from_labels(["person"]));
        let scored =
            score_object_batch(&[det(0, "person", 0.9), det(1, "cart", 0.8)], &list).unwrap();
        assert_eq!(
            scored.iter().map(|s| s.normalized).collect::<Vec<_>>(),
            vec![0.0, 1.0]
        );

        // (-0.5 + 0.9) / (0.8 + 0.9) = 0.4 / 1.7
        let scored = score_object_batch(
            &[
                det(0, "person", 0.9),
                det(1, "person", 0.5),
                det(2, "cart", 0.8),
            ],
            &list,
        )
        .unwrap();
        assert!((scored[1].normalized - 0.2353).abs() < 1e-4);
        assert_eq!(scored[1].target.target_id, TargetId(1));

        let single = score_object_batch(&[det(0, "person", 0.9)], &list).unwrap();
        assert_eq!(single[0].normalized, 0.5);
    }

    #[test]
    fn empty_test_set_is_an_error() {
        assert!(score_object_batch(&[], &LabelList::default()).is_err());
    }
}
