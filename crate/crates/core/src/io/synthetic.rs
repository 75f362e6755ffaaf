//! Seeded synthetic scenes with known anomalies.
//!
//! Each target walks back and forth along its own horizontal lane. Flow
//! fields are built analytically: every pixel of a target's box carries the
//! target's displacement since the previous frame, the background is still,
//! and both get small Gaussian noise. Abnormal targets appear only in the
//! testing split, one after another in a shared lane, each during its own
//! window of frames, and their boxes are marked in the ground-truth masks.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::Mask;
use crate::io::dataset::{Dataset, Split};
use crate::rng::{seeded, Stream};
use crate::types::{BBox, Detection, FlowField, TargetId, TrackSegment, TrackedBox};

pub const NORMAL_OBJECT: &str = "person";
pub const NORMAL_ACTIONS: [&str; 2] = ["walking", "standing"];
pub const NOVEL_OBJECT: &str = "car";
pub const NOVEL_ACTION: &str = "riding";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnomalyKind {
    /// Unseen object label, normal action and speed.
    NovelObject,
    /// Unseen action label, normal object and speed.
    NovelAction,
    /// Normal labels, speed drawn from the fast range.
    FastMotion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSceneConfig {
    pub width: u32,
    pub height: u32,
    pub training_frames: u32,
    pub testing_frames: u32,
    pub normal_targets: usize,
    pub abnormal_targets: usize,
    pub anomaly_kinds: Vec<AnomalyKind>,
    /// Per-frame speed range of normal targets, pixels/frame.
    pub normal_speed: (f64, f64),
    /// Speed range of fast-motion anomalies, pixels/frame.
    pub fast_speed: (f64, f64),
    /// Standard deviation of detector and recognizer confidences.
    pub confidence_noise: f64,
    /// Standard deviation of per-pixel flow noise.
    pub flow_noise: f64,
    pub box_size: (u32, u32),
    pub k_frames: usize,
    pub seed: u64,
}

impl Default for SyntheticSceneConfig {
    fn default() -> Self {
        SyntheticSceneConfig {
            width: 96,
            height: 64,
            training_frames: 150,
            testing_frames: 240,
            normal_targets: 3,
            abnormal_targets: 3,
            anomaly_kinds: vec![
                AnomalyKind::NovelObject,
                AnomalyKind::NovelAction,
                AnomalyKind::FastMotion,
            ],
            normal_speed: (0.3, 1.4),
            fast_speed: (3.6, 5.0),
            confidence_noise: 0.01,
            flow_noise: 0.05,
            box_size: (8, 12),
            k_frames: 5,
            seed: 0,
        }
    }
}

impl SyntheticSceneConfig {
    /// Keys of `text` layered over the defaults; unknown keys are errors.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    fn lane_height(&self) -> u32 {
        self.box_size.1 + 2
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.normal_targets == 0 {
            return bad("synthetic scene needs at least one normal target".into());
        }
        for (name, (lo, hi)) in [
            ("normal_speed", self.normal_speed),
            ("fast_speed", self.fast_speed),
        ] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return bad(format!("{name} must be a positive range, got ({lo}, {hi})"));
            }
        }
        if self.abnormal_targets > 0 && self.anomaly_kinds.is_empty() {
            return bad("abnormal targets need at least one anomaly kind".into());
        }
        let lanes = self.normal_targets as u32 + u32::from(self.abnormal_targets > 0);
        if self.box_size.0 == 0 || self.box_size.1 == 0 {
            return bad("box_size must be positive".into());
        }
        if lanes.saturating_mul(self.lane_height()) > self.height
            || self.width < 2 * self.box_size.0
        {
            return bad(format!(
                "{}x{} frame cannot hold {lanes} lanes of {:?} boxes",
                self.width, self.height, self.box_size
            ));
        }
        if self.k_frames == 0 {
            return bad("k_frames must be positive".into());
        }
        if self.abnormal_targets as u32 * 2 > self.testing_frames {
            return bad("too many abnormal targets for the testing length".into());
        }
        if !(self.confidence_noise >= 0.0 && self.flow_noise >= 0.0) {
            return bad("noise levels must be non-negative".into());
        }
        Ok(())
    }
}

struct Actor {
    id: TargetId,
    lane: u32,
    first: u32,
    last: u32,
    label: &'static str,
    action: &'static str,
    speed: (f64, f64),
    conf_mean: f64,
    act_conf_mean: f64,
}

struct Track {
    boxes: BTreeMap<u32, (BBox, f32)>,
}

fn simulate(actor: &Actor, cfg: &SyntheticSceneConfig, rng: &mut ChaCha8Rng) -> Track {
    let (bw, bh) = cfg.box_size;
    let max_x = f64::from(cfg.width - bw);
    let y = actor.lane * cfg.lane_height() + 1;
    let mut x = rng.random_range(0.0..=max_x);
    let mut dir = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let mut boxes = BTreeMap::new();
    for frame in actor.first..=actor.last {
        let speed = rng.random_range(actor.speed.0..=actor.speed.1);
        let mut next = x + dir * speed;
        if next < 0.0 || next > max_x {
            dir = -dir;
            next = x + dir * speed;
        }
        let dx = (next - x) as f32;
        x = next.clamp(0.0, max_x);
        boxes.insert(frame, (BBox::new(x.round() as u32, y, bw, bh), dx));
    }
    Track { boxes }
}

fn noisy_conf(rng: &mut ChaCha8Rng, mean: f64, sd: f64, hi: f64) -> f64 {
    let noise = if sd > 0.0 {
        Normal::new(0.0, sd).expect("finite sd").sample(rng)
    } else {
        0.0
    };
    (mean + noise).clamp(0.0, hi)
}

fn build_split(
    actors: &[Actor],
    frames: u32,
    cfg: &SyntheticSceneConfig,
    rng: &mut ChaCha8Rng,
    abnormal: &[bool],
) -> Split {
    let tracks: Vec<Track> = actors.iter().map(|a| simulate(a, cfg, rng)).collect();
    let sd = cfg.confidence_noise;
    let k = cfg.k_frames as u32;

    let mut detections = Vec::new();
    let mut segments = Vec::new();
    for frame in 0..frames {
        for (actor, track) in actors.iter().zip(&tracks) {
            let Some(&(bbox, _)) = track.boxes.get(&frame) else {
                continue;
            };
            detections.push(Detection {
                frame_index: frame,
                target_id: actor.id,
                bbox,
                obj_label: actor.label.into(),
                obj_conf: noisy_conf(rng, actor.conf_mean, sd, 0.999),
            });
            if frame + 1 >= actor.first + k {
                segments.push(TrackSegment {
                    target_id: actor.id,
                    frames: (frame + 1 - k..=frame)
                        .map(|f| TrackedBox {
                            frame_index: f,
                            bbox: track.boxes[&f].0,
                        })
                        .collect(),
                    act_label: actor.action.into(),
                    act_conf: noisy_conf(rng, actor.act_conf_mean, sd / 4.0, 0.9999),
                });
            }
        }
    }

    let noise =
        (cfg.flow_noise > 0.0).then(|| Normal::new(0.0, cfg.flow_noise).expect("finite sd"));
    let mut flows = BTreeMap::new();
    let mut masks = BTreeMap::new();
    for frame in 0..frames {
        let mut flow = FlowField::zeros(cfg.width, cfg.height);
        if let Some(n) = &noise {
            for y in 0..cfg.height {
                for x in 0..cfg.width {
                    flow.set(x, y, [n.sample(rng) as f32, n.sample(rng) as f32]);
                }
            }
        }
        let mut mask = Mask::empty(cfg.width, cfg.height);
        for (i, track) in tracks.iter().enumerate() {
            let Some(&(b, dx)) = track.boxes.get(&frame) else {
                continue;
            };
            for y in b.y..b.y + b.h {
                for x in b.x..b.x + b.w {
                    let [nu, nv] = flow.get(x, y);
                    flow.set(x, y, [dx + nu, nv]);
                }
            }
            if abnormal[i] {
                mask.fill(b);
            }
        }
        flows.insert(frame, flow);
        masks.insert(frame, mask);
    }

    Split {
        frame_count: frames,
        detections,
        segments,
        flows,
        masks,
    }
}

/// The lane index also picks the action, so every split sees the same
/// normal vocabulary.
fn normal_actor(id: u64, lane: u32, frames: u32, cfg: &SyntheticSceneConfig) -> Actor {
    Actor {
        id: TargetId(id),
        lane,
        first: 0,
        last: frames - 1,
        label: NORMAL_OBJECT,
        action: NORMAL_ACTIONS[lane as usize % NORMAL_ACTIONS.len()],
        speed: cfg.normal_speed,
        conf_mean: 0.975,
        act_conf_mean: 0.996,
    }
}

/// Which anomaly each abnormal target of `cfg` exhibits (round robin).
pub fn anomaly_schedule(cfg: &SyntheticSceneConfig) -> Vec<(AnomalyKind, u32, u32)> {
    let slot = cfg.testing_frames / cfg.abnormal_targets.max(1) as u32;
    (0..cfg.abnormal_targets)
        .map(|i| {
            let kind = cfg.anomaly_kinds[i % cfg.anomaly_kinds.len()];
            let start = i as u32 * slot + slot / 4;
            let end = (start + slot / 2).max(start + 1) - 1;
            (kind, start, end)
        })
        .collect()
}

pub fn generate_synthetic(cfg: &SyntheticSceneConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = seeded(cfg.seed, Stream::Scene);
    let n = cfg.normal_targets;

    let training_actors: Vec<Actor> = (0..n)
        .map(|i| normal_actor(i as u64, i as u32, cfg.training_frames, cfg))
        .collect();
    let training = {
        let abnormal = vec![false; training_actors.len()];
        let mut split = build_split(
            &training_actors,
            cfg.training_frames,
            cfg,
            &mut rng,
            &abnormal,
        );
        split.masks.clear();
        split
    };

    let mut testing_actors: Vec<Actor> = (0..n)
        .map(|i| normal_actor(1000 + i as u64, i as u32, cfg.testing_frames, cfg))
        .collect();
    for (i, (kind, first, last)) in anomaly_schedule(cfg).into_iter().enumerate() {
        let mut actor = normal_actor(2000 + i as u64, n as u32, cfg.testing_frames, cfg);
        actor.first = first;
        actor.last = last;
        actor.action = NORMAL_ACTIONS[0];
        match kind {
            AnomalyKind::NovelObject => {
                actor.label = NOVEL_OBJECT;
                actor.conf_mean = 0.9;
            }
            AnomalyKind::NovelAction => {
                actor.action = NOVEL_ACTION;
                actor.act_conf_mean = 0.93;
            }
            AnomalyKind::FastMotion => actor.speed = cfg.fast_speed,
        }
        testing_actors.push(actor);
    }
    let abnormal: Vec<bool> = (0..testing_actors.len()).map(|i| i >= n).collect();
    let testing = build_split(
        &testing_actors,
        cfg.testing_frames,
        cfg,
        &mut rng,
        &abnormal,
    );

    let ds = Dataset {
        width: cfg.width,
        height: cfg.height,
        training,
        testing,
    };
    ds.validate()?;
    Ok(ds)
}
