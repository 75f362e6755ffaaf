//! End-to-end driver: train on the training split, score and fuse every test
//! target, evaluate against the ground-truth masks.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::action::{build_action_list, score_action_batch, ActionList};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::evaluation::{
    auc, frame_scores, pixel_frames, pixel_roc, roc, Mask, RocCurve, ScoredBox,
};
use crate::fusion::{explain, fuse_batch};
use crate::io::dataset::{load_dataset, Dataset, Split};
use crate::io::results::{
    plot_data, read_results, roc_text, write_results, BranchAucs, LevelSummary, ResultRecord,
    Summary,
};
use crate::motion::{
    compute_hmof, normalize_motion_scores, train_motion_model, AutoencoderModel, GmmModel,
    MotionModel,
};
use crate::object::{build_label_list, score_object_batch, LabelList};
use crate::types::{BranchScores, BranchValue, TargetRef};
use crate::whitelist::{ScoredTarget, Vocabulary};

pub const LABEL_LIST_FILE: &str = "label_list.txt";
pub const ACTION_LIST_FILE: &str = "action_list.txt";
pub const AUTOENCODER_FILE: &str = "autoencoder.tfae";
pub const GMM_FILE: &str = "gmm.tfgm";
pub const RESULTS_FILE: &str = "results.jsonl";
pub const ROC_FRAME_FILE: &str = "roc_frame.txt";
pub const ROC_PIXEL_FILE: &str = "roc_pixel.txt";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const TRAINING_LOG_FILE: &str = "training.json";

/// Everything learned from the training split.
#[derive(Debug, Clone)]
pub struct TrainedModels {
    pub label_list: LabelList,
    pub action_list: ActionList,
    pub motion: MotionModel,
    pub ae_loss: Vec<f64>,
    pub gmm_log_likelihood: Vec<f64>,
}

fn check_segments(split: &Split, k: usize) -> Result<()> {
    split.segments.iter().try_for_each(|s| s.validate(k))
}

/// HMOF features of every detection whose frame has a flow field.
pub fn split_features(split: &Split, cfg: &PipelineConfig) -> Result<Vec<(TargetRef, Vec<f64>)>> {
    let mut out = Vec::new();
    for d in &split.detections {
        if let Some(flow) = split.flows.get(&d.frame_index) {
            out.push((d.target_ref(), compute_hmof(flow, d.bbox, &cfg.hmof)?.bins));
        }
    }
    Ok(out)
}

pub fn train(cfg: &PipelineConfig, ds: &Dataset) -> Result<TrainedModels> {
    cfg.validate()?;
    let split = &ds.training;
    check_segments(split, cfg.k_frames).map_err(|e| e.in_stage("train"))?;
    let label_list =
        build_label_list(&split.detections, cfg.alpha).map_err(|e| e.in_stage("object"))?;
    let action_list =
        build_action_list(&split.segments, cfg.beta).map_err(|e| e.in_stage("action"))?;

    let features: Vec<Vec<f64>> = split_features(split, cfg)
        .map_err(|e| e.in_stage("motion"))?
        .into_iter()
        .map(|(_, f)| f)
        .collect();
    let trained = train_motion_model(
        &features,
        cfg.motion.feature_space,
        &cfg.autoencoder(),
        &cfg.gmm_config(),
    )
    .map_err(|e| e.in_stage("motion"))?;

    Ok(TrainedModels {
        label_list,
        action_list,
        motion: trained.model,
        ae_loss: trained.ae_loss,
        gmm_log_likelihood: trained.gmm_log_likelihood,
    })
}

fn index(scored: Vec<ScoredTarget>) -> BTreeMap<TargetRef, BranchValue> {
    scored
        .into_iter()
        .map(|s| {
            (
                s.target,
                BranchValue {
                    raw: s.raw,
                    normalized: s.normalized,
                },
            )
        })
        .collect()
}

/// Per-branch scores, fusion and explanations for every test detection,
/// ordered by frame then target.
pub fn score(
    cfg: &PipelineConfig,
    ds: &Dataset,
    models: &TrainedModels,
) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    let split = &ds.testing;
    check_segments(split, cfg.k_frames).map_err(|e| e.in_stage("score"))?;
    if split.detections.is_empty() {
        return Err(Error::EmptyScores.in_stage("score"));
    }

    let obj = index(
        score_object_batch(&split.detections, &models.label_list)
            .map_err(|e| e.in_stage("object"))?,
    );
    let act = if split.segments.is_empty() {
        BTreeMap::new()
    } else {
        index(
            score_action_batch(&split.segments, &models.action_list)
                .map_err(|e| e.in_stage("action"))?,
        )
    };
    let features = split_features(split, cfg).map_err(|e| e.in_stage("motion"))?;
    let mot = if features.is_empty() {
        BTreeMap::new()
    } else {
        let raw = features
            .iter()
            .map(|(t, f)| models.motion.log_likelihood(f).map(|ll| (*t, ll)))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.in_stage("motion"))?;
        index(normalize_motion_scores(&raw).map_err(|e| e.in_stage("motion"))?)
    };

    let detections = split.detection_index();
    let segments = split.segment_index();
    let branch_scores: Vec<BranchScores> = detections
        .keys()
        .map(|t| BranchScores {
            sco_obj: obj.get(t).copied(),
            sco_act: act.get(t).copied(),
            sco_mot: mot.get(t).copied(),
            ..BranchScores::empty(*t)
        })
        .collect();
    let fused = fuse_batch(&branch_scores, &cfg.fusion).map_err(|e| e.in_stage("fusion"))?;

    Ok(branch_scores
        .iter()
        .zip(fused)
        .map(|(s, f)| {
            let t = s.target_ref();
            let det = detections[&t];
            let explanation = explain(
                det,
                segments.get(&t).copied(),
                s.sco_mot.map(|m| m.normalized),
                cfg.fusion.motion_flag_threshold,
            );
            let fs = f.with_explanation(explanation);
            ResultRecord {
                frame_index: t.frame_index,
                target_id: t.target_id,
                bbox: det.bbox,
                obj: s.sco_obj,
                act: s.sco_act,
                mot: s.sco_mot,
                fused_raw: fs.raw,
                fused: fs.normalized,
                decision: fs.decision,
                explanation: fs.explanation,
            }
        })
        .collect())
}

/// Frame- and pixel-level curves plus the summary record.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub frame_curve: RocCurve,
    pub pixel_curve: RocCurve,
    pub summary: Summary,
}

fn branch_auc(
    records: &[ResultRecord],
    masks: &BTreeMap<u32, Mask>,
    pick: impl Fn(&ResultRecord) -> Option<BranchValue>,
) -> Result<f64> {
    let boxes: Vec<ScoredBox> = records
        .iter()
        .filter_map(|r| {
            pick(r).map(|v| ScoredBox {
                frame_index: r.frame_index,
                score: v.normalized,
                bbox: r.bbox,
            })
        })
        .collect();
    Ok(auc(&roc(&frame_scores(&boxes, masks)?)?))
}

pub fn evaluate(records: &[ResultRecord], masks: &BTreeMap<u32, Mask>) -> Result<Evaluation> {
    let boxes: Vec<ScoredBox> = records.iter().map(ResultRecord::scored_box).collect();
    let frames = frame_scores(&boxes, masks)?;
    let frame_curve = roc(&frames)?;
    let pixel_curve = pixel_roc(&pixel_frames(&boxes, masks)?)?;
    let summary = Summary {
        frames: frames.len(),
        abnormal_frames: frames.iter().filter(|f| f.gt_abnormal).count(),
        targets: records.len(),
        flagged_targets: records
            .iter()
            .filter(|r| r.decision == crate::types::Decision::Abnormal)
            .count(),
        frame_level: LevelSummary::from_curve(&frame_curve),
        pixel_level: LevelSummary::from_curve(&pixel_curve),
        branch_frame_auc: BranchAucs {
            object: branch_auc(records, masks, |r| r.obj)?,
            action: branch_auc(records, masks, |r| r.act)?,
            motion: branch_auc(records, masks, |r| r.mot)?,
        },
    };
    Ok(Evaluation {
        frame_curve,
        pixel_curve,
        summary,
    })
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn save_models(out: &Path, cfg: &PipelineConfig, models: &TrainedModels) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    models.label_list.save(&out.join(LABEL_LIST_FILE))?;
    models.action_list.save(&out.join(ACTION_LIST_FILE))?;
    models
        .motion
        .autoencoder
        .save(&out.join(AUTOENCODER_FILE))?;
    models.motion.gmm.save(&out.join(GMM_FILE))?;
    write(&out.join(CONFIG_FILE), cfg.to_toml_string()?)?;
    let log = serde_json::json!({
        "autoencoder_loss": models.ae_loss,
        "gmm_mean_log_likelihood": models.gmm_log_likelihood,
    });
    write(&out.join(TRAINING_LOG_FILE), log.to_string() + "\n")
}

pub fn load_models(out: &Path, cfg: &PipelineConfig) -> Result<TrainedModels> {
    Ok(TrainedModels {
        label_list: LabelList(Vocabulary::load(&out.join(LABEL_LIST_FILE))?),
        action_list: ActionList(Vocabulary::load(&out.join(ACTION_LIST_FILE))?),
        motion: MotionModel {
            feature_space: cfg.motion.feature_space,
            autoencoder: AutoencoderModel::load(&out.join(AUTOENCODER_FILE))?,
            gmm: GmmModel::load(&out.join(GMM_FILE))?,
        },
        ae_loss: Vec::new(),
        gmm_log_likelihood: Vec::new(),
    })
}

pub fn save_evaluation(out: &Path, eval: &Evaluation) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write(&out.join(ROC_FRAME_FILE), roc_text(&eval.frame_curve))?;
    write(&out.join(ROC_PIXEL_FILE), roc_text(&eval.pixel_curve))?;
    write(&out.join(SUMMARY_FILE), eval.summary.to_json()?)
}

pub fn save_plot_data(path: &Path, eval: &Evaluation) -> Result<()> {
    write(path, plot_data(&eval.frame_curve, &eval.pixel_curve))
}

/// `eval` stage from files: results in `out`, masks from the dataset.
pub fn evaluate_files(data_root: &Path, out: &Path) -> Result<Evaluation> {
    let ds = load_dataset(data_root).map_err(|e| e.in_stage("load"))?;
    let records = read_results(&out.join(RESULTS_FILE)).map_err(|e| e.in_stage("eval"))?;
    let eval = evaluate(&records, &ds.testing.masks).map_err(|e| e.in_stage("eval"))?;
    save_evaluation(out, &eval)?;
    Ok(eval)
}

/// Runs every stage and writes all artifacts to `out`.
pub fn run_pipeline(cfg: &PipelineConfig, data_root: &Path, out: &Path) -> Result<Summary> {
    let ds = load_dataset(data_root).map_err(|e| e.in_stage("load"))?;
    run_on_dataset(cfg, &ds, out)
}

pub fn run_on_dataset(cfg: &PipelineConfig, ds: &Dataset, out: &Path) -> Result<Summary> {
    let models = train(cfg, ds)?;
    save_models(out, cfg, &models)?;
    let records = score(cfg, ds, &models)?;
    write_results(&out.join(RESULTS_FILE), &records)?;
    let eval = evaluate(&records, &ds.testing.masks).map_err(|e| e.in_stage("eval"))?;
    save_evaluation(out, &eval)?;
    Ok(eval.summary)
}
