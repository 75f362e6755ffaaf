//! Confidence-filtered vocabularies built from training data, and the signed
//! raw score shared by the object and action branches.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::normalize::min_max_normalize;
use crate::types::TargetRef;

/// Labels seen in training with confidence strictly above a threshold.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    labels: BTreeSet<String>,
}

impl Vocabulary {
    pub fn build<'a, I>(observations: I, threshold: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "confidence threshold {threshold} outside (0, 1)"
            )));
        }
        let labels = observations
            .into_iter()
            .filter(|&(_, conf)| conf > threshold)
            .map(|(label, _)| label.to_owned())
            .collect();
        Ok(Vocabulary { labels })
    }

    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Vocabulary {
            labels: labels.into_iter().map(Into::into).collect(),
        }
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.contains(label)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }

    /// `-conf` for a known label, `+conf` otherwise.
    pub fn signed_score(&self, label: &str, conf: f64) -> f64 {
        if self.contains(label) {
            -conf
        } else {
            conf
        }
    }

    /// Sorted, one label per line, trailing newline after each.
    pub fn to_text(&self) -> Result<String> {
        let mut out = String::new();
        for label in &self.labels {
            if label.contains(['\n', '\r']) || label.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "label {label:?} cannot be stored in a line-delimited list"
                )));
            }
            out.push_str(label);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Self {
        Vocabulary::from_labels(text.lines().filter(|l| !l.is_empty()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Vocabulary::from_text(&text))
    }
}

/// A target's raw and batch-normalized score in one branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredTarget {
    pub target: TargetRef,
    pub raw: f64,
    pub normalized: f64,
}

pub(crate) fn normalize_batch(raw: Vec<(TargetRef, f64)>) -> Result<Vec<ScoredTarget>> {
    let values: Vec<f64> = raw.iter().map(|&(_, r)| r).collect();
    let normalized = min_max_normalize(&values)?;
    Ok(raw
        .into_iter()
        .zip(normalized)
        .map(|((target, raw), normalized)| ScoredTarget {
            target,
            raw,
            normalized,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_is_sorted_and_round_trips() {
        let v = Vocabulary::from_labels(["person", "bicycle", "car"]);
        let text = v.to_text().unwrap();
        assert_eq!(text, "bicycle\ncar\nperson\n");
        assert_eq!(Vocabulary::from_text(&text), v);
    }

    #[test]
    fn rejects_labels_with_newlines() {
        let v = Vocabulary::from_labels(["a\nb"]);
        assert!(v.to_text().is_err());
    }

    #[test]
    fn threshold_must_be_open_unit_interval() {
        assert!(Vocabulary::build(std::iter::empty(), 1.0).is_err());
        assert!(Vocabulary::build(std::iter::empty(), 0.0).is_err());
    }

    #[test]
    fn matching_is_case_sensitive() {
        let v = Vocabulary::from_labels(["person"]);
        assert_eq!(v.signed_score("Person", 0.5), 0.5);
        assert_eq!(v.signed_score("person", 0.5), -0.5);
    }
}
