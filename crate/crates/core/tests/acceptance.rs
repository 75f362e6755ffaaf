//! Acceptance suite. Each criterion runs in isolation and prints one
//! PASS/FAIL line; the process exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trifuse::evaluation::{
    auc, frame_scores, pixel_frames, pixel_level_hit, pixel_roc, roc, FrameScore, Mask, ScoredBox,
};
use trifuse::fusion::{fuse_batch, fuse_raw, BranchWeights, FusionConfig, MissingBranchPolicy};
use trifuse::io::{generate_synthetic, load_dataset, save_dataset, SyntheticSceneConfig};
use trifuse::motion::{fit_gmm, Activation, AutoencoderModel, GmmConfig, GmmModel};
use trifuse::pipeline::{load_models, run_on_dataset, save_models, train};
use trifuse::{
    min_max_invert_normalize, min_max_normalize, BBox, BranchScores, BranchValue, PipelineConfig,
    Preset, TargetId,
};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let held: bool = $cond;
        if !held {
            return Err(format!($($fmt)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    if elapsed > Duration::from_secs(limit_s) {
        Err(format!("took {elapsed:.2?}, limit {limit_s} s"))
    } else {
        Ok(())
    }
}

fn random_list(r: &mut ChaCha8Rng) -> (Vec<f64>, bool) {
    let n = r.random_range(1..=64);
    match r.random_range(0..4) {
        0 => ((0..n).map(|_| r.random_range(-1e3..1e3)).collect(), false),
        1 => (
            (0..n).map(|_| r.random_range(-20i32..=20) as f64).collect(),
            true,
        ),
        2 => (vec![r.random_range(-5.0..5.0); n], false),
        _ => (
            (0..n)
                .map(|_| r.random_range(-1.0..1.0) * 1e-6 + 7.0)
                .collect(),
            false,
        ),
    }
}

fn normalization_suite() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut degenerate = 0;
    for case in 0..10_000 {
        let (xs, integral) = random_list(&mut r);
        let fwd = min_max_normalize(&xs).map_err(|e| e.to_string())?;
        let inv = min_max_invert_normalize(&xs).map_err(|e| e.to_string())?;
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo == hi {
            degenerate += 1;
            ensure!(
                fwd.iter().chain(&inv).all(|&v| v == 0.5),
                "case {case}: equal scores must map to 0.5"
            );
            continue;
        }
        for (i, &x) in xs.iter().enumerate() {
            if x == lo {
                ensure!(
                    fwd[i] == 0.0 && inv[i] == 1.0,
                    "case {case}: min not mapped exactly"
                );
            }
            if x == hi {
                ensure!(
                    fwd[i] == 1.0 && inv[i] == 0.0,
                    "case {case}: max not mapped exactly"
                );
            }
            ensure!(
                (0.0..=1.0).contains(&fwd[i]),
                "case {case}: {} out of range",
                fwd[i]
            );
            ensure!(
                fwd[i] + inv[i] == 1.0 || (fwd[i] + inv[i] - 1.0).abs() < 1e-15,
                "case {case}: inverted form is not the mirror image"
            );
        }
        for i in 0..xs.len() {
            for j in 0..xs.len() {
                if xs[i] < xs[j] {
                    ensure!(
                        fwd[i] <= fwd[j] && inv[i] >= inv[j],
                        "case {case}: order broken"
                    );
                    if integral {
                        ensure!(
                            fwd[i] < fwd[j] && inv[i] > inv[j],
                            "case {case}: strict order lost"
                        );
                    }
                }
            }
        }
    }
    within(start.elapsed(), 5)?;
    Ok(format!(
        "10000 lists ({degenerate} degenerate) in {:.2?}",
        start.elapsed()
    ))
}

fn em_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2);
    let mut worst = 0.0f64;
    let mut checked_steps = 0usize;
    for case in 0..100 {
        let n = r.random_range(20..200);
        let dim = r.random_range(1..=9);
        let centre: Vec<f64> = (0..dim).map(|_| r.random_range(-50.0..50.0)).collect();
        let scale: Vec<f64> = (0..dim).map(|_| r.random_range(0.01..10.0)).collect();
        let samples: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..dim)
                    .map(|d| centre[d] + scale[d] * r.random_range(-1.0..1.0))
                    .collect()
            })
            .collect();
        let cfg = GmmConfig {
            k: 1,
            seed: case,
            ..GmmConfig::default()
        };
        let fit = fit_gmm(&samples, &cfg).map_err(|e| e.to_string())?;
        for d in 0..dim {
            let mean = samples.iter().map(|s| s[d]).sum::<f64>() / n as f64;
            let var = samples.iter().map(|s| (s[d] - mean).powi(2)).sum::<f64>() / n as f64;
            let dm = (fit.model.means[0][d] - mean).abs() / mean.abs().max(var.sqrt());
            let dv = (fit.model.variances[0][d] - var).abs() / var;
            worst = worst.max(dm).max(dv);
            ensure!(
                dm <= 1e-8 && dv <= 1e-8,
                "case {case} dim {d}: rel err mean {dm:e} var {dv:e}"
            );
        }
        ensure!(
            fit.model.weights[0] == 1.0,
            "case {case}: single weight {}",
            fit.model.weights[0]
        );
    }
    // Monotonicity over multi-component fits on clustered data.
    for case in 0..100u64 {
        let k = r.random_range(1..=5);
        let dim = r.random_range(1..=4);
        let clusters = r.random_range(1..=4);
        let centres: Vec<Vec<f64>> = (0..clusters)
            .map(|_| (0..dim).map(|_| r.random_range(-10.0..10.0)).collect())
            .collect();
        let n = r.random_range(30..150);
        let samples: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let c = &centres[i % clusters];
                (0..dim).map(|d| c[d] + r.random_range(-1.0..1.0)).collect()
            })
            .collect();
        let cfg = GmmConfig {
            k,
            seed: case,
            ..GmmConfig::default()
        };
        let fit = fit_gmm(&samples, &cfg).map_err(|e| e.to_string())?;
        for (i, w) in fit.log_likelihood.windows(2).enumerate() {
            if fit.reseeded.contains(&i) {
                continue;
            }
            checked_steps += 1;
            ensure!(
                w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0),
                "case {case} (k={k}): log-likelihood fell from {} to {} at iteration {i}",
                w[0],
                w[1]
            );
        }
    }
    within(start.elapsed(), 30)?;
    Ok(format!(
        "worst rel err {worst:.1e}; {checked_steps} EM steps monotone; {:.2?}",
        start.elapsed()
    ))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut r = rng(3);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for point in 0..20u64 {
        let mut model = AutoencoderModel::initialize(&[9, 4, 9], Activation::Sigmoid, point);
        // Spread parameters beyond the initialization range.
        let params: Vec<f64> = model
            .parameters()
            .iter()
            .map(|p| p * r.random_range(0.5..4.0))
            .collect();
        model.set_parameters(&params).map_err(|e| e.to_string())?;
        let data: Vec<Vec<f64>> = (0..12)
            .map(|_| {
                let raw: Vec<f64> = (0..9).map(|_| r.random::<f64>()).collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / s).collect()
            })
            .collect();
        let (_, analytic) = model.loss_and_gradient(&data).map_err(|e| e.to_string())?;
        let mut numeric = vec![0.0; params.len()];
        let mut probe = model.clone();
        for i in 0..params.len() {
            let mut p = params.clone();
            p[i] = params[i] + h;
            probe.set_parameters(&p).map_err(|e| e.to_string())?;
            let up = probe.loss(&data).map_err(|e| e.to_string())?;
            p[i] = params[i] - h;
            probe.set_parameters(&p).map_err(|e| e.to_string())?;
            let down = probe.loss(&data).map_err(|e| e.to_string())?;
            numeric[i] = (up - down) / (2.0 * h);
        }
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, n)| a - n).collect();
        let rel = norm(&diff) / (norm(&analytic) + norm(&numeric)).max(1e-300);
        worst = worst.max(rel);
        ensure!(rel < 1e-5, "point {point}: relative error {rel:e}");
    }
    within(start.elapsed(), 10)?;
    Ok(format!(
        "20 points on 9-4-9, worst relative error {worst:.1e}"
    ))
}

fn mann_whitney(frames: &[FrameScore]) -> f64 {
    let pos: Vec<f64> = frames
        .iter()
        .filter(|f| f.gt_abnormal)
        .map(|f| f.score)
        .collect();
    let neg: Vec<f64> = frames
        .iter()
        .filter(|f| !f.gt_abnormal)
        .map(|f| f.score)
        .collect();
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            wins += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

fn auc_oracle() -> Outcome {
    let start = Instant::now();
    let worked: Vec<FrameScore> = [(0.1, false), (0.4, false), (0.35, true), (0.8, true)]
        .iter()
        .enumerate()
        .map(|(i, &(score, gt_abnormal))| FrameScore {
            frame_index: i as u32,
            score,
            gt_abnormal,
        })
        .collect();
    let worked_auc = auc(&roc(&worked).map_err(|e| e.to_string())?);
    ensure!(worked_auc == 0.75, "worked example gave {worked_auc}");

    let mut r = rng(4);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let n = r.random_range(2..=500);
        let levels = r.random_range(2..40);
        let coarse = r.random_bool(0.5);
        let mut frames: Vec<FrameScore> = (0..n)
            .map(|i| FrameScore {
                frame_index: i as u32,
                score: if coarse {
                    r.random_range(0..levels) as f64 / levels as f64
                } else {
                    r.random::<f64>()
                },
                gt_abnormal: r.random_bool(0.3),
            })
            .collect();
        frames[0].gt_abnormal = true;
        frames[1].gt_abnormal = false;
        let a = auc(&roc(&frames).map_err(|e| e.to_string())?);
        let m = mann_whitney(&frames);
        worst = worst.max((a - m).abs());
        ensure!(
            (a - m).abs() <= 1e-9,
            "case {case}: trapezoid {a} vs pairwise {m}"
        );
    }
    within(start.elapsed(), 30)?;
    Ok(format!(
        "worked example 0.75; 1000 sets, worst gap {worst:.1e}"
    ))
}

fn random_box(r: &mut ChaCha8Rng, w: u32, h: u32) -> BBox {
    let bw = r.random_range(1..=w / 2);
    let bh = r.random_range(1..=h / 2);
    BBox::new(
        r.random_range(0..=w - bw),
        r.random_range(0..=h - bh),
        bw,
        bh,
    )
}

fn pixel_rule() -> Outcome {
    let mut gt = Mask::empty(20, 20);
    gt.fill(BBox::new(0, 0, 10, 10));
    let hit = |boxes: &[BBox]| pixel_level_hit(boxes, &gt).map_err(|e| e.to_string());
    ensure!(
        hit(&[BBox::new(0, 0, 10, 4), BBox::new(0, 4, 1, 1)])?,
        "41/100 must hit"
    );
    ensure!(!hit(&[BBox::new(0, 0, 10, 4)])?, "40/100 must miss");
    ensure!(!hit(&[BBox::new(12, 12, 8, 8)])?, "0/100 must miss");

    let mut r = rng(5);
    let (w, h) = (32, 24);
    let mut compared = 0usize;
    for set in 0..100 {
        let frames = r.random_range(4..30);
        let mut masks = BTreeMap::new();
        let mut boxes = Vec::new();
        for f in 0..frames {
            let mut m = Mask::empty(w, h);
            if r.random_bool(0.4) || f == 0 {
                for _ in 0..r.random_range(1..3) {
                    m.fill(random_box(&mut r, w, h));
                }
            }
            masks.insert(f, m);
            for _ in 0..r.random_range(0..4) {
                boxes.push(ScoredBox {
                    frame_index: f,
                    score: r.random_range(0..10) as f64 / 10.0,
                    bbox: random_box(&mut r, w, h),
                });
            }
        }
        // Guarantee a normal frame.
        masks.insert(frames, Mask::empty(w, h));
        let fs = frame_scores(&boxes, &masks).map_err(|e| e.to_string())?;
        let frame_curve = roc(&fs).map_err(|e| e.to_string())?;
        let pf = pixel_frames(&boxes, &masks).map_err(|e| e.to_string())?;
        let pixel_curve = pixel_roc(&pf).map_err(|e| e.to_string())?;
        for (i, t) in frame_curve.thresholds.iter().enumerate() {
            let j = pixel_curve
                .thresholds
                .iter()
                .position(|u| u == t)
                .ok_or_else(|| format!("set {set}: threshold {t:?} missing from pixel curve"))?;
            let (fp, pp) = (frame_curve.points[i], pixel_curve.points[j]);
            ensure!(
                fp.fpr == pp.fpr,
                "set {set}: false-positive rates differ at {t:?}"
            );
            ensure!(
                pp.tpr <= fp.tpr,
                "set {set}: pixel TPR {} > frame TPR {} at {t:?}",
                pp.tpr,
                fp.tpr
            );
            compared += 1;
        }
    }
    Ok(format!(
        "41/40/0 cases correct; {compared} thresholds over 100 sets"
    ))
}

fn random_value(r: &mut ChaCha8Rng) -> Option<BranchValue> {
    r.random_bool(0.8).then(|| BranchValue {
        raw: r.random_range(-1.0..1.0),
        normalized: r.random(),
    })
}

fn fusion_dominance() -> Outcome {
    let mut r = rng(6);
    let mut all = Vec::with_capacity(10_000);
    while all.len() < 10_000 {
        let i = all.len() as u64;
        let s = BranchScores {
            target_id: TargetId(i),
            frame_index: (i / 7) as u32,
            sco_obj: random_value(&mut r),
            sco_act: random_value(&mut r),
            sco_mot: random_value(&mut r),
        };
        if s.sco_obj.is_some() || s.sco_act.is_some() || s.sco_mot.is_some() {
            all.push(s);
        }
    }
    let mut flips = 0usize;
    for (b, batch) in all.chunks(100).enumerate() {
        let cfg = FusionConfig {
            weights: BranchWeights {
                obj: r.random_range(0.1..3.0),
                act: r.random_range(0.1..3.0),
                mot: r.random_range(0.1..3.0),
            },
            decision_threshold: r.random_range(0.05..0.95),
            missing_branch: MissingBranchPolicy::Ignore,
            motion_flag_threshold: 0.5,
        };
        for s in batch {
            let fused = fuse_raw(s, &cfg).map_err(|e| e.to_string())?;
            let weighted: Vec<f64> = [
                (s.sco_obj, cfg.weights.obj),
                (s.sco_act, cfg.weights.act),
                (s.sco_mot, cfg.weights.mot),
            ]
            .iter()
            .filter_map(|&(v, w)| v.map(|v| w * v.normalized))
            .collect();
            ensure!(
                weighted.iter().all(|&w| fused >= w),
                "target {}: fused below a branch",
                s.target_id
            );
            ensure!(
                weighted.contains(&fused),
                "target {}: fused is not a branch value",
                s.target_id
            );
        }
        let base = fuse_batch(batch, &cfg).map_err(|e| e.to_string())?;
        for _ in 0..5 {
            let factor = r.random_range(0.01..100.0);
            let scaled_cfg = FusionConfig {
                weights: cfg.weights.scaled(factor),
                ..cfg
            };
            let scaled = fuse_batch(batch, &scaled_cfg).map_err(|e| e.to_string())?;
            flips += base
                .iter()
                .zip(&scaled)
                .filter(|(a, b)| a.decision != b.decision)
                .count();
            ensure!(
                flips == 0,
                "batch {b}: decisions changed under scaling by {factor}"
            );
        }
    }
    Ok("10000 targets dominated; decisions stable under 500 weight scalings".into())
}

fn ped2_config(seed: u64) -> PipelineConfig {
    let mut cfg = PipelineConfig::preset(Preset::Ped2);
    cfg.seed = seed;
    cfg
}

fn trend_reproduction() -> Outcome {
    let start = Instant::now();
    let scene = SyntheticSceneConfig::default();
    let ds = generate_synthetic(&scene).map_err(|e| e.to_string())?;
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let summary =
        run_on_dataset(&ped2_config(scene.seed), &ds, out.path()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let fused = summary.frame_level.auc;
    let b = summary.branch_frame_auc;
    let detail = format!(
        "fused {fused:.4}, object {:.4}, action {:.4}, motion {:.4}, {elapsed:.2?}",
        b.object, b.action, b.motion
    );
    ensure!(fused >= 0.95, "fused AUC below 0.95: {detail}");
    ensure!(
        [b.object, b.action, b.motion]
            .iter()
            .all(|&a| fused >= a - 0.02),
        "a single branch beats fusion: {detail}"
    );
    within(elapsed, 60)?;
    Ok(detail)
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).expect("readable output dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                files.insert(rel, fs::read(&path).expect("readable file"));
            }
        }
    }
    files
}

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_trifuse"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        out.status.success(),
        "trifuse {} failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(())
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| tmp.path().join(name).to_string_lossy().into_owned();
    cli(&["gen", "--out", &p("data"), "--seed", "11"])?;
    for run in ["a", "b"] {
        cli(&[
            "run",
            "--data",
            &p("data"),
            "--out",
            &p(run),
            "--seed",
            "11",
        ])?;
    }
    let (a, b) = (
        read_tree(&tmp.path().join("a")),
        read_tree(&tmp.path().join("b")),
    );
    ensure!(!a.is_empty(), "run produced no files");
    ensure!(
        a.keys().eq(b.keys()),
        "file sets differ: {:?} vs {:?}",
        a.keys().collect::<Vec<_>>(),
        b.keys().collect::<Vec<_>>()
    );
    for (name, bytes) in &a {
        ensure!(bytes == &b[name], "{name} differs between runs");
    }
    Ok(format!("{} files byte-identical across two runs", a.len()))
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn gmm_bits_equal(a: &GmmModel, b: &GmmModel) -> bool {
    same_bits(&a.weights, &b.weights)
        && a.means.iter().zip(&b.means).all(|(x, y)| same_bits(x, y))
        && a.variances
            .iter()
            .zip(&b.variances)
            .all(|(x, y)| same_bits(x, y))
        && a.covariance_floor.to_bits() == b.covariance_floor.to_bits()
}

fn format_round_trips() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let scene = SyntheticSceneConfig {
        seed: 21,
        ..SyntheticSceneConfig::default()
    };
    let ds = generate_synthetic(&scene).map_err(|e| e.to_string())?;
    save_dataset(&ds, &tmp.path().join("data")).map_err(|e| e.to_string())?;
    let loaded = load_dataset(&tmp.path().join("data")).map_err(|e| e.to_string())?;
    ensure!(loaded == ds, "dataset changed across save/load");

    let cfg = ped2_config(21);
    let models = train(&cfg, &ds).map_err(|e| e.to_string())?;
    let dir = tmp.path().join("models");
    save_models(&dir, &cfg, &models).map_err(|e| e.to_string())?;
    let back = load_models(&dir, &cfg).map_err(|e| e.to_string())?;
    ensure!(
        back.label_list.0 == models.label_list.0,
        "label list changed"
    );
    ensure!(
        back.action_list.0 == models.action_list.0,
        "action list changed"
    );
    let (ae, ae2) = (&models.motion.autoencoder, &back.motion.autoencoder);
    ensure!(
        ae.widths() == ae2.widths() && ae.activation == ae2.activation,
        "autoencoder shape changed"
    );
    ensure!(
        same_bits(&ae.parameters(), &ae2.parameters()),
        "autoencoder parameters changed"
    );
    ensure!(
        gmm_bits_equal(&models.motion.gmm, &back.motion.gmm),
        "mixture parameters changed"
    );
    Ok(format!(
        "dataset ({} + {} detections) and {} autoencoder + {} mixture components reload exactly",
        ds.training.detections.len(),
        ds.testing.detections.len(),
        ae.param_count(),
        models.motion.gmm.k()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("normalization suite", normalization_suite),
        ("EM oracle", em_oracle),
        ("autoencoder gradient check", gradient_check),
        ("AUC oracle equivalence", auc_oracle),
        ("pixel-level rule", pixel_rule),
        ("fusion dominance", fusion_dominance),
        ("trend reproduction", trend_reproduction),
        ("determinism", determinism),
        ("format round-trips", format_round_trips),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why})", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
