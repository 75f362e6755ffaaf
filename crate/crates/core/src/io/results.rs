//! Pipeline outputs: per-target result records, ROC point files, summary.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{RocCurve, ScoredBox};
use crate::io::dataset::write_jsonl;
use crate::types::{BBox, BranchValue, Decision, Explanation, FusedScore, TargetId};

/// One line of `results.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRecord {
    pub frame_index: u32,
    pub target_id: TargetId,
    pub bbox: BBox,
    pub obj: Option<BranchValue>,
    pub act: Option<BranchValue>,
    pub mot: Option<BranchValue>,
    pub fused_raw: f64,
    pub fused: f64,
    pub decision: Decision,
    pub explanation: Explanation,
}

impl ResultRecord {
    pub fn fused_score(&self) -> FusedScore {
        FusedScore {
            target_id: self.target_id,
            frame_index: self.frame_index,
            raw: self.fused_raw,
            normalized: self.fused,
            decision: self.decision,
            explanation: self.explanation.clone(),
        }
    }

    pub fn scored_box(&self) -> ScoredBox {
        ScoredBox {
            frame_index: self.frame_index,
            score: self.fused,
            bbox: self.bbox,
        }
    }
}

pub fn write_results(path: &Path, records: &[ResultRecord]) -> Result<()> {
    write_jsonl(path, records)
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| Error::data(path, format!("line {}", i + 1), e.to_string()))
        })
        .collect()
}

/// Two whitespace-separated columns: false-positive rate, true-positive rate.
pub fn roc_text(curve: &RocCurve) -> String {
    let mut out = String::from("# fpr tpr\n");
    for p in &curve.points {
        let _ = writeln!(out, "{} {}", p.fpr, p.tpr);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    /// `None` is the closing negative-infinity threshold.
    pub threshold: Option<f64>,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub auc: f64,
    pub eer: f64,
    pub thresholds: Vec<ThresholdRow>,
}

impl LevelSummary {
    pub fn from_curve(curve: &RocCurve) -> Self {
        LevelSummary {
            auc: crate::evaluation::auc(curve),
            eer: crate::evaluation::eer(curve),
            thresholds: curve
                .points
                .iter()
                .zip(&curve.thresholds)
                .map(|(p, &threshold)| ThresholdRow {
                    threshold,
                    fpr: p.fpr,
                    tpr: p.tpr,
                })
                .collect(),
        }
    }
}

/// Frame-level AUC of each branch taken on its own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchAucs {
    pub object: f64,
    pub action: f64,
    pub motion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub frames: usize,
    pub abnormal_frames: usize,
    pub targets: usize,
    pub flagged_targets: usize,
    pub frame_level: LevelSummary,
    pub pixel_level: LevelSummary,
    pub branch_frame_auc: BranchAucs,
}

impl Summary {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|s| s + "\n")
            .map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

/// Plot-data file: `level fpr tpr` rows for both curves.
pub fn plot_data(frame: &RocCurve, pixel: &RocCurve) -> String {
    let mut out = String::from("# level fpr tpr\n");
    for (level, curve) in [("frame", frame), ("pixel", pixel)] {
        for p in &curve.points {
            let _ = writeln!(out, "{level} {} {}", p.fpr, p.tpr);
        }
    }
    out
}
