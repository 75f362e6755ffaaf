use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use trifuse::config::{PipelineConfig, Preset};
use trifuse::io::results::{read_results, write_results, Summary};
use trifuse::io::{generate_synthetic, load_dataset, save_dataset, SyntheticSceneConfig};
use trifuse::pipeline::{self, RESULTS_FILE};
use trifuse::{Decision, Error, Result};

#[derive(Parser)]
#[command(
    name = "trifuse",
    version,
    about = "Object / action / motion anomaly fusion for surveillance video"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Key-value config file layered over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset root directory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Hyperparameter preset: umn or ped2.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Gen {
        #[command(flatten)]
        common: Common,
        /// Scene description (flat key-value file); defaults otherwise.
        #[arg(long)]
        scene: Option<PathBuf>,
    },
    /// Build label/action lists and fit the autoencoder and mixture.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Score and fuse every test target with models from --out.
    Score {
        #[command(flatten)]
        common: Common,
    },
    /// Frame- and pixel-level ROC, AUC and EER for --out/results.jsonl.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Also write plot data (level fpr tpr rows).
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// train + score + eval.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Print the explanation of each flagged target in --out/results.jsonl.
    Explain {
        #[command(flatten)]
        common: Common,
        /// Include targets judged normal.
        #[arg(long)]
        all: bool,
    },
}

impl Common {
    fn config(&self) -> Result<PipelineConfig> {
        let preset: Preset = self
            .preset
            .as_deref()
            .map_or(Ok(Preset::default()), str::parse)?;
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path, preset)?,
            None => PipelineConfig::preset(preset),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn data(&self) -> Result<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| Error::Config("--data is required".into()))
    }

    fn out(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::Config("--out is required".into()))
    }
}

fn print_summary(s: &Summary) {
    println!(
        "frames {} (abnormal {}), targets {} (flagged {})",
        s.frames, s.abnormal_frames, s.targets, s.flagged_targets
    );
    println!(
        "frame-level AUC {:.4} EER {:.4}",
        s.frame_level.auc, s.frame_level.eer
    );
    println!(
        "pixel-level AUC {:.4} EER {:.4}",
        s.pixel_level.auc, s.pixel_level.eer
    );
    let b = s.branch_frame_auc;
    println!(
        "branch frame-level AUC: object {:.4} action {:.4} motion {:.4}",
        b.object, b.action, b.motion
    );
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { common, scene } => {
            let mut cfg = match scene {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                    SyntheticSceneConfig::from_toml_str(&text)?
                }
                None => SyntheticSceneConfig::default(),
            };
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            let ds = generate_synthetic(&cfg)?;
            save_dataset(&ds, common.out()?)?;
            println!(
                "wrote {} training and {} testing frames to {}",
                ds.training.frame_count,
                ds.testing.frame_count,
                common.out()?.display()
            );
        }
        Command::Train { common } => {
            let cfg = common.config()?;
            let ds = load_dataset(common.data()?).map_err(|e| e.in_stage("load"))?;
            let models = pipeline::train(&cfg, &ds)?;
            pipeline::save_models(common.out()?, &cfg, &models)?;
            println!(
                "{} object labels, {} actions, autoencoder loss {:.3e}",
                models.label_list.len(),
                models.action_list.len(),
                models.ae_loss.last().copied().unwrap_or(f64::NAN)
            );
        }
        Command::Score { common } => {
            let cfg = common.config()?;
            let out = common.out()?;
            let ds = load_dataset(common.data()?).map_err(|e| e.in_stage("load"))?;
            let models = pipeline::load_models(out, &cfg).map_err(|e| e.in_stage("score"))?;
            let records = pipeline::score(&cfg, &ds, &models)?;
            write_results(&out.join(RESULTS_FILE), &records)?;
            let flagged = records
                .iter()
                .filter(|r| r.decision == Decision::Abnormal)
                .count();
            println!("scored {} targets, {flagged} abnormal", records.len());
        }
        Command::Eval { common, plot } => {
            let eval = pipeline::evaluate_files(common.data()?, common.out()?)?;
            if let Some(path) = plot {
                pipeline::save_plot_data(&path, &eval)?;
            }
            print_summary(&eval.summary);
        }
        Command::Run { common } => {
            let cfg = common.config()?;
            let summary = pipeline::run_pipeline(&cfg, common.data()?, common.out()?)?;
            print_summary(&summary);
        }
        Command::Explain { common, all } => {
            let records = read_results(&common.out()?.join(RESULTS_FILE))?;
            for r in records
                .iter()
                .filter(|r| all || r.decision == Decision::Abnormal)
            {
                println!(
                    "frame {} target {} {:?} {:.4}: {}",
                    r.frame_index, r.target_id, r.decision, r.fused, r.explanation
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind().exit_code() as u8)
        }
    }
}
