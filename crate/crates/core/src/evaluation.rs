//! Frame- and pixel-level ROC construction, AUC and EER.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::BBox;

/// Per-frame binary ground truth, row-major, `true` = abnormal pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32, pixels: Vec<bool>) -> Result<Self> {
        if pixels.len() != width as usize * height as usize {
            return Err(Error::WidthMismatch {
                expected: width as usize * height as usize,
                actual: pixels.len(),
            });
        }
        Ok(Mask {
            width,
            height,
            pixels,
        })
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Mask {
            width,
            height,
            pixels: vec![false; width as usize * height as usize],
        }
    }

    pub fn fill(&mut self, bbox: BBox) {
        let x_end = (bbox.x + bbox.w).min(self.width);
        let y_end = (bbox.y + bbox.h).min(self.height);
        for y in bbox.y..y_end {
            let row = y as usize * self.width as usize;
            self.pixels[row + bbox.x as usize..row + x_end as usize].fill(true);
        }
    }

    pub fn abnormal_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    pub fn is_abnormal(&self) -> bool {
        self.pixels.iter().any(|&p| p)
    }
}

/// One scored target box, the unit consumed by the evaluators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredBox {
    pub frame_index: u32,
    pub score: f64,
    pub bbox: BBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub frame_index: u32,
    pub score: f64,
    pub gt_abnormal: bool,
}

/// Frame score = max target score in the frame (0 when it has no targets).
pub fn frame_scores(results: &[ScoredBox], masks: &BTreeMap<u32, Mask>) -> Result<Vec<FrameScore>> {
    let mut best: BTreeMap<u32, f64> = masks.keys().map(|&f| (f, 0.0)).collect();
    for r in results {
        let slot = best.get_mut(&r.frame_index).ok_or(Error::MissingMask {
            frame: r.frame_index,
        })?;
        *slot = slot.max(r.score);
    }
    Ok(best
        .into_iter()
        .map(|(frame_index, score)| FrameScore {
            frame_index,
            score,
            gt_abnormal: masks[&frame_index].is_abnormal(),
        })
        .collect())
}

/// True iff the union of `regions` covers strictly more than 40% of the
/// abnormal ground-truth pixels.
pub fn pixel_level_hit(regions: &[BBox], gt: &Mask) -> Result<bool> {
    let hit = coverage_threshold(regions.iter().map(|&b| (0.0, b)), gt)?;
    Ok(hit.is_some())
}

fn covers_enough(covered: usize, total: usize) -> bool {
    // covered / total > 0.4, in integers.
    covered * 5 > total * 2
}

/// Adds regions in the given order and returns the score of the region whose
/// addition first pushes coverage over the 40% rule.
fn coverage_threshold<I>(regions: I, gt: &Mask) -> Result<Option<f64>>
where
    I: IntoIterator<Item = (f64, BBox)>,
{
    let total = gt.abnormal_count();
    if total == 0 {
        return Err(Error::PixelUndefined);
    }
    let mut seen = vec![false; gt.pixels.len()];
    let mut covered = 0usize;
    for (score, b) in regions {
        let x_end = b.x.saturating_add(b.w).min(gt.width);
        let y_end = b.y.saturating_add(b.h).min(gt.height);
        for y in b.y.min(gt.height)..y_end {
            let row = y as usize * gt.width as usize;
            for x in b.x.min(gt.width)..x_end {
                let i = row + x as usize;
                if !seen[i] {
                    seen[i] = true;
                    covered += usize::from(gt.pixels[i]);
                }
            }
        }
        if covers_enough(covered, total) {
            return Ok(Some(score));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC polyline from (0,0) to (1,1). `thresholds[i]` produced `points[i]`
/// under the rule `score > threshold`; `None` stands for negative infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub thresholds: Vec<Option<f64>>,
}

/// Distinct scores in descending order, each with the number of positive and
/// negative frames carrying it.
fn grouped_desc(
    scores: impl Iterator<Item = (f64, bool)>,
) -> (Vec<(f64, usize, usize)>, usize, usize) {
    let mut sorted: Vec<(f64, bool)> = scores.collect();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    let (mut pos, mut neg) = (0, 0);
    for (s, label) in sorted {
        match groups.last_mut() {
            Some(g) if g.0 == s => {}
            _ => groups.push((s, 0, 0)),
        }
        let g = groups.last_mut().expect("just pushed");
        if label {
            g.1 += 1;
            pos += 1;
        } else {
            g.2 += 1;
            neg += 1;
        }
    }
    (groups, pos, neg)
}

fn check_classes(pos: usize, neg: usize) -> Result<()> {
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateRoc {
            positives: pos,
            negatives: neg,
        });
    }
    Ok(())
}

/// Frame-level ROC: a frame is predicted abnormal when its score exceeds the
/// threshold.
pub fn roc(frames: &[FrameScore]) -> Result<RocCurve> {
    if let Some(f) = frames.iter().find(|f| !f.score.is_finite()) {
        return Err(Error::NonFinite {
            index: f.frame_index as usize,
            value: f.score,
        });
    }
    let (groups, pos, neg) = grouped_desc(frames.iter().map(|f| (f.score, f.gt_abnormal)));
    check_classes(pos, neg)?;
    let mut points = Vec::with_capacity(groups.len() + 1);
    let mut thresholds = Vec::with_capacity(groups.len() + 1);
    let (mut tp, mut fp) = (0usize, 0usize);
    for (score, gp, gn) in groups {
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
        thresholds.push(Some(score));
        tp += gp;
        fp += gn;
    }
    points.push(RocPoint { fpr: 1.0, tpr: 1.0 });
    thresholds.push(None);
    Ok(RocCurve { points, thresholds })
}

/// Input to the pixel-level ROC: a frame's ground truth and its scored boxes.
#[derive(Debug, Clone)]
pub struct PixelFrame<'a> {
    pub frame_index: u32,
    pub gt: &'a Mask,
    pub targets: Vec<(f64, BBox)>,
}

impl PixelFrame<'_> {
    pub fn score(&self) -> f64 {
        self.targets.iter().map(|t| t.0).fold(0.0, f64::max)
    }
}

/// Groups scored boxes per frame for [`pixel_roc`].
pub fn pixel_frames<'a>(
    results: &[ScoredBox],
    masks: &'a BTreeMap<u32, Mask>,
) -> Result<Vec<PixelFrame<'a>>> {
    let mut frames: BTreeMap<u32, PixelFrame<'a>> = masks
        .iter()
        .map(|(&frame_index, gt)| {
            (
                frame_index,
                PixelFrame {
                    frame_index,
                    gt,
                    targets: Vec::new(),
                },
            )
        })
        .collect();
    for r in results {
        frames
            .get_mut(&r.frame_index)
            .ok_or(Error::MissingMask {
                frame: r.frame_index,
            })?
            .targets
            .push((r.score, r.bbox));
    }
    Ok(frames.into_values().collect())
}

/// Pixel-level ROC: false positives are counted per frame as in the frame-level
/// curve, but an abnormal frame only counts as a true positive when the boxes
/// scoring above the threshold satisfy [`pixel_level_hit`]. The curve is closed
/// with (1,1).
pub fn pixel_roc(frames: &[PixelFrame<'_>]) -> Result<RocCurve> {
    // Per abnormal frame, the largest threshold below which it becomes a hit.
    let mut hit_scores = Vec::new();
    let mut frame_level = Vec::with_capacity(frames.len());
    for f in frames {
        let abnormal = f.gt.is_abnormal();
        frame_level.push(FrameScore {
            frame_index: f.frame_index,
            score: f.score(),
            gt_abnormal: abnormal,
        });
        if abnormal {
            let mut ordered = f.targets.clone();
            ordered.sort_by(|a, b| b.0.total_cmp(&a.0));
            if let Some(s) = coverage_threshold(ordered, f.gt)? {
                hit_scores.push(s);
            }
        }
    }
    let frame_curve = roc(&frame_level)?;
    let positives = frame_level.iter().filter(|f| f.gt_abnormal).count() as f64;
    hit_scores.sort_by(|a, b| b.total_cmp(a));

    let mut points = Vec::with_capacity(frame_curve.points.len() + 1);
    for (p, t) in frame_curve.points.iter().zip(&frame_curve.thresholds) {
        let hits = match t {
            Some(t) => hit_scores.partition_point(|s| s > t),
            None => hit_scores.len(),
        };
        points.push(RocPoint {
            fpr: p.fpr,
            tpr: hits as f64 / positives,
        });
    }
    let mut thresholds = frame_curve.thresholds;
    if points.last() != Some(&RocPoint { fpr: 1.0, tpr: 1.0 }) {
        points.push(RocPoint { fpr: 1.0, tpr: 1.0 });
        thresholds.push(None);
    }
    Ok(RocCurve { points, thresholds })
}

/// Trapezoidal area under the polyline.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) * 0.5)
        .sum()
}

/// Rate at which the false-positive rate equals the miss rate, interpolated
/// linearly on the segment where `fpr + tpr - 1` changes sign.
pub fn eer(curve: &RocCurve) -> f64 {
    let gap = |p: &RocPoint| p.fpr + p.tpr - 1.0;
    for w in curve.points.windows(2) {
        let (g0, g1) = (gap(&w[0]), gap(&w[1]));
        if g0 == 0.0 {
            return w[0].fpr;
        }
        if g0 < 0.0 && g1 >= 0.0 {
            let t = -g0 / (g1 - g0);
            return w[0].fpr + t * (w[1].fpr - w[0].fpr);
        }
    }
    curve.points.last().map_or(0.5, |p| p.fpr)
}
