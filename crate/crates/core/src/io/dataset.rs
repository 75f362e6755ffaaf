//! Dataset directory layout.
//!
//! ```text
//! <root>/manifest.json
//! <root>/{training,testing}/detections.jsonl   one Detection per line
//! <root>/{training,testing}/segments.jsonl     one TrackSegment per line
//! <root>/{training,testing}/flow/<frame>.tffl  flow into <frame> from the previous frame
//! <root>/testing/masks/<frame>.pgm             ground truth, P5, 0/255
//! ```
//!
//! Frame file names are the zero-padded frame index (`000042.tffl`).

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::Mask;
use crate::io::flow::{read_flow, write_flow};
use crate::io::pgm::{read_mask, write_mask};
use crate::types::{check_confidence, Detection, FlowField, TargetId, TargetRef, TrackSegment};

pub const MANIFEST: &str = "manifest.json";
pub const DATASET_FORMAT: &str = "trifuse-dataset";
const FLOW_EXT: &str = "tffl";
const MASK_EXT: &str = "pgm";

/// One video split.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Split {
    pub frame_count: u32,
    pub detections: Vec<Detection>,
    pub segments: Vec<TrackSegment>,
    pub flows: BTreeMap<u32, FlowField>,
    pub masks: BTreeMap<u32, Mask>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub width: u32,
    pub height: u32,
    pub training: Split,
    pub testing: Split,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    version: u32,
    width: u32,
    height: u32,
    training_frames: u32,
    testing_frames: u32,
}

pub fn frame_file_name(frame: u32, ext: &str) -> String {
    format!("{frame:06}.{ext}")
}

impl Dataset {
    /// Checks every record against the frame geometry and cross-references
    /// between record kinds.
    pub fn validate(&self) -> Result<()> {
        validate_split(self, &self.training, Path::new("training"))?;
        validate_split(self, &self.testing, Path::new("testing"))
    }
}

fn validate_split(ds: &Dataset, split: &Split, dir: &Path) -> Result<()> {
    let det_path = dir.join("detections.jsonl");
    let seg_path = dir.join("segments.jsonl");
    let frames = split.frame_count;
    let mut seen = BTreeSet::new();
    for (i, d) in split.detections.iter().enumerate() {
        let at = format!("line {}", i + 1);
        if d.frame_index >= frames {
            return Err(Error::data(
                &det_path,
                at,
                format!(
                    "dangling frame {} (split has {frames} frames)",
                    d.frame_index
                ),
            ));
        }
        d.bbox
            .check_within(ds.width, ds.height)
            .and_then(|_| check_confidence(d.obj_conf))
            .map_err(|e| Error::data(&det_path, at.clone(), e.to_string()))?;
        if !seen.insert(d.target_ref()) {
            return Err(Error::data(
                &det_path,
                at,
                format!(
                    "duplicate detection of target {} in frame {}",
                    d.target_id, d.frame_index
                ),
            ));
        }
    }

    let mut attributed = BTreeSet::new();
    for (i, s) in split.segments.iter().enumerate() {
        let at = format!("line {}", i + 1);
        let fail = |msg: String| Error::data(&seg_path, at.clone(), msg);
        let last = s
            .target_ref()
            .ok_or_else(|| fail("empty track segment".into()))?;
        s.validate(s.frames.len())
            .map_err(|e| fail(e.to_string()))?;
        for f in &s.frames {
            if f.frame_index >= frames {
                return Err(fail(format!(
                    "dangling frame {} (split has {frames} frames)",
                    f.frame_index
                )));
            }
            f.bbox
                .check_within(ds.width, ds.height)
                .map_err(|e| fail(e.to_string()))?;
        }
        if !seen.contains(&last) {
            return Err(fail(format!(
                "target {} has no detection in frame {}",
                last.target_id, last.frame_index
            )));
        }
        if !attributed.insert(last) {
            return Err(fail(format!(
                "second segment for target {} ending in frame {}",
                last.target_id, last.frame_index
            )));
        }
    }

    for (&frame, flow) in &split.flows {
        let path = dir.join("flow").join(frame_file_name(frame, FLOW_EXT));
        if frame >= frames {
            return Err(Error::data(
                path,
                "header",
                format!("dangling frame {frame}"),
            ));
        }
        if (flow.width(), flow.height()) != (ds.width, ds.height) {
            return Err(Error::data(
                path,
                "header",
                format!(
                    "flow is {}x{}, frames are {}x{}",
                    flow.width(),
                    flow.height(),
                    ds.width,
                    ds.height
                ),
            ));
        }
    }
    for (&frame, mask) in &split.masks {
        let path = dir.join("masks").join(frame_file_name(frame, MASK_EXT));
        if frame >= frames {
            return Err(Error::data(
                path,
                "header",
                format!("dangling frame {frame}"),
            ));
        }
        if (mask.width, mask.height) != (ds.width, ds.height) {
            return Err(Error::data(
                path,
                "header",
                format!(
                    "mask is {}x{}, frames are {}x{}",
                    mask.width, mask.height, ds.width, ds.height
                ),
            ));
        }
    }
    Ok(())
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
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

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        let line =
            serde_json::to_string(r).map_err(|e| Error::data(path, "write", e.to_string()))?;
        out.push_str(&line);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn read_frame_files<T>(
    dir: &Path,
    ext: &str,
    read: impl Fn(&Path) -> Result<T>,
) -> Result<BTreeMap<u32, T>> {
    let mut out = BTreeMap::new();
    if !dir.exists() {
        return Ok(out);
    }
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<_>>()?;
    paths.sort();
    for path in paths {
        if path.extension().and_then(|e| e.to_str()) != Some(ext) {
            continue;
        }
        let frame = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| {
                Error::data(
                    &path,
                    "file name",
                    "expected <frame index>.".to_owned() + ext,
                )
            })?;
        out.insert(frame, read(&path)?);
    }
    Ok(out)
}

fn load_split(root: &Path, name: &str, frame_count: u32, with_masks: bool) -> Result<Split> {
    let dir = root.join(name);
    Ok(Split {
        frame_count,
        detections: read_jsonl(&dir.join("detections.jsonl"))?,
        segments: read_jsonl(&dir.join("segments.jsonl"))?,
        flows: read_frame_files(&dir.join("flow"), FLOW_EXT, read_flow)?,
        masks: if with_masks {
            read_frame_files(&dir.join("masks"), MASK_EXT, read_mask)?
        } else {
            BTreeMap::new()
        },
    })
}

pub fn load_dataset(root: &Path) -> Result<Dataset> {
    let manifest_path = root.join(MANIFEST);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let m: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::data(&manifest_path, "manifest", e.to_string()))?;
    if m.format != DATASET_FORMAT || m.version != 1 {
        return Err(Error::data(
            &manifest_path,
            "manifest",
            format!("unsupported dataset format {:?} v{}", m.format, m.version),
        ));
    }
    let ds = Dataset {
        width: m.width,
        height: m.height,
        training: load_split(root, "training", m.training_frames, false)?,
        testing: load_split(root, "testing", m.testing_frames, true)?,
    };
    ds.validate().map_err(|e| match e {
        Error::Data {
            path,
            position,
            message,
        } => Error::Data {
            path: root.join(path),
            position,
            message,
        },
        other => other,
    })?;
    Ok(ds)
}

fn save_split(root: &Path, name: &str, split: &Split) -> Result<()> {
    let dir = root.join(name);
    let mkdir = |p: &Path| fs::create_dir_all(p).map_err(|e| Error::io(p, e));
    mkdir(&dir)?;
    write_jsonl(&dir.join("detections.jsonl"), &split.detections)?;
    write_jsonl(&dir.join("segments.jsonl"), &split.segments)?;
    let flow_dir = dir.join("flow");
    mkdir(&flow_dir)?;
    for (&frame, flow) in &split.flows {
        write_flow(&flow_dir.join(frame_file_name(frame, FLOW_EXT)), flow)?;
    }
    if !split.masks.is_empty() {
        let mask_dir = dir.join("masks");
        mkdir(&mask_dir)?;
        for (&frame, mask) in &split.masks {
            write_mask(&mask_dir.join(frame_file_name(frame, MASK_EXT)), mask)?;
        }
    }
    Ok(())
}

pub fn save_dataset(ds: &Dataset, root: &Path) -> Result<()> {
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let manifest = Manifest {
        format: DATASET_FORMAT.into(),
        version: 1,
        width: ds.width,
        height: ds.height,
        training_frames: ds.training.frame_count,
        testing_frames: ds.testing.frame_count,
    };
    let path = root.join(MANIFEST);
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::data(&path, "write", e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    if !ds.training.masks.is_empty() {
        return Err(Error::InvalidArgument(
            "training split cannot carry masks".into(),
        ));
    }
    save_split(root, "training", &ds.training)?;
    save_split(root, "testing", &ds.testing)
}

impl Split {
    /// Detections keyed by target and frame.
    pub fn detection_index(&self) -> BTreeMap<TargetRef, &Detection> {
        self.detections
            .iter()
            .map(|d| (d.target_ref(), d))
            .collect()
    }

    /// Segments keyed by the target and frame they are attributed to.
    pub fn segment_index(&self) -> BTreeMap<TargetRef, &TrackSegment> {
        self.segments
            .iter()
            .filter_map(|s| s.target_ref().map(|t| (t, s)))
            .collect()
    }

    pub fn target_ids(&self) -> BTreeSet<TargetId> {
        self.detections.iter().map(|d| d.target_id).collect()
    }
}
