//! Domain records shared by every branch.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque per-target identifier assigned by the upstream detector/tracker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TargetId(pub u64);

impl fmt::Display for TargetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One target observed in one frame. Every per-target score is keyed by this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TargetRef {
    pub frame_index: u32,
    pub target_id: TargetId,
}

/// Axis-aligned pixel box `(x, y, w, h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BBox {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        BBox { x, y, w, h }
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    pub fn fits_in(&self, width: u32, height: u32) -> bool {
        u64::from(self.x) + u64::from(self.w) <= u64::from(width)
            && u64::from(self.y) + u64::from(self.h) <= u64::from(height)
    }

    pub(crate) fn as_tuple(&self) -> (u32, u32, u32, u32) {
        (self.x, self.y, self.w, self.h)
    }

    pub(crate) fn check_within(&self, width: u32, height: u32) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyRegion);
        }
        if !self.fits_in(width, height) {
            return Err(Error::OutOfBounds {
                bbox: self.as_tuple(),
                width,
                height,
            });
        }
        Ok(())
    }
}

/// Object detector output for one target in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frame_index: u32,
    pub target_id: TargetId,
    pub bbox: BBox,
    pub obj_label: String,
    pub obj_conf: f64,
}

impl Detection {
    pub fn target_ref(&self) -> TargetRef {
        TargetRef {
            frame_index: self.frame_index,
            target_id: self.target_id,
        }
    }
}

/// One tracked box inside a [`TrackSegment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackedBox {
    pub frame_index: u32,
    pub bbox: BBox,
}

/// K consecutive tracked boxes of one target with the action recognized over them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackSegment {
    pub target_id: TargetId,
    pub frames: Vec<TrackedBox>,
    pub act_label: String,
    pub act_conf: f64,
}

impl TrackSegment {
    /// The frame a segment's action score is attributed to.
    pub fn last_frame(&self) -> Option<u32> {
        self.frames.last().map(|f| f.frame_index)
    }

    pub fn target_ref(&self) -> Option<TargetRef> {
        self.last_frame().map(|frame_index| TargetRef {
            frame_index,
            target_id: self.target_id,
        })
    }

    /// Checks length `k`, strictly consecutive frames and confidence range.
    pub fn validate(&self, k: usize) -> Result<()> {
        if self.frames.len() != k {
            return Err(Error::InvalidArgument(format!(
                "track segment for target {} has {} frames, expected {k}",
                self.target_id,
                self.frames.len()
            )));
        }
        if let Some(pair) = self
            .frames
            .windows(2)
            .find(|w| w[1].frame_index != w[0].frame_index.wrapping_add(1))
        {
            return Err(Error::InvalidArgument(format!(
                "track segment for target {} jumps from frame {} to {}",
                self.target_id, pair[0].frame_index, pair[1].frame_index
            )));
        }
        check_confidence(self.act_conf)
    }
}

pub(crate) fn check_confidence(c: f64) -> Result<()> {
    if (0.0..=1.0).contains(&c) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "confidence {c} outside [0, 1]"
        )))
    }
}

/// Dense optical flow for one frame, row-major `(u, v)` in pixels/frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: u32,
    height: u32,
    vectors: Vec<[f32; 2]>,
}

impl FlowField {
    pub fn new(width: u32, height: u32, vectors: Vec<[f32; 2]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(
                "flow field dimensions must be positive".into(),
            ));
        }
        let expected = width as usize * height as usize;
        if vectors.len() != expected {
            return Err(Error::WidthMismatch {
                expected,
                actual: vectors.len(),
            });
        }
        if let Some(i) = vectors
            .iter()
            .position(|v| !v[0].is_finite() || !v[1].is_finite())
        {
            let v = vectors[i];
            return Err(Error::NonFinite {
                index: i,
                value: if v[0].is_finite() { v[1] } else { v[0] }.into(),
            });
        }
        Ok(FlowField {
            width,
            height,
            vectors,
        })
    }

    pub fn zeros(width: u32, height: u32) -> Self {
        FlowField {
            width,
            height,
            vectors: vec![[0.0, 0.0]; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn vectors(&self) -> &[[f32; 2]] {
        &self.vectors
    }

    pub fn get(&self, x: u32, y: u32) -> [f32; 2] {
        self.vectors[y as usize * self.width as usize + x as usize]
    }

    pub(crate) fn set(&mut self, x: u32, y: u32, uv: [f32; 2]) {
        let w = self.width as usize;
        self.vectors[y as usize * w + x as usize] = uv;
    }
}

/// Raw and min-max normalized score of one branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchValue {
    pub raw: f64,
    pub normalized: f64,
}

/// Per-target, per-frame view of the three branch scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchScores {
    pub target_id: TargetId,
    pub frame_index: u32,
    pub sco_obj: Option<BranchValue>,
    pub sco_act: Option<BranchValue>,
    pub sco_mot: Option<BranchValue>,
}

impl BranchScores {
    pub fn empty(target: TargetRef) -> Self {
        BranchScores {
            target_id: target.target_id,
            frame_index: target.frame_index,
            sco_obj: None,
            sco_act: None,
            sco_mot: None,
        }
    }

    pub fn target_ref(&self) -> TargetRef {
        TargetRef {
            frame_index: self.frame_index,
            target_id: self.target_id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Normal,
    Abnormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MotionFlag {
    #[serde(rename = "normal motion")]
    Normal,
    #[serde(rename = "abnormal motion")]
    Abnormal,
}

impl MotionFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            MotionFlag::Normal => "normal motion",
            MotionFlag::Abnormal => "abnormal motion",
        }
    }
}

/// Human-readable reason triple: object label, action label, motion flag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Explanation {
    pub obj_label: String,
    pub act_label: String,
    pub motion: MotionFlag,
}

impl fmt::Display for Explanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "'{}', '{}', '{}'",
            self.obj_label,
            self.act_label,
            self.motion.as_str()
        )
    }
}

/// Final fused score of one target in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedScore {
    pub target_id: TargetId,
    pub frame_index: u32,
    pub raw: f64,
    pub normalized: f64,
    pub decision: Decision,
    pub explanation: Explanation,
}
