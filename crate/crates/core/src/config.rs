//! Pipeline configuration, presets, and the key-value config file.
//!
//! Config files are TOML restricted to scalar keys with dotted section names,
//! for example
//!
//! ```text
//! preset = "umn"
//! alpha = 0.95
//! hmof.magnitude_cap = 1.8
//! fusion.weights.mot = 1.5
//! ```
//!
//! Keys are layered over a preset (`ped2` unless the file or caller says
//! otherwise). Unknown keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{BranchWeights, FusionConfig, MissingBranchPolicy};
use crate::motion::{Activation, AutoencoderConfig, FeatureSpace, GmmConfig, HmofConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preset {
    Umn,
    #[default]
    Ped2,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "umn" => Ok(Preset::Umn),
            "ped2" => Ok(Preset::Ped2),
            other => Err(Error::Config(format!(
                "unknown preset {other:?} (expected \"umn\" or \"ped2\")"
            ))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Umn => "umn",
            Preset::Ped2 => "ped2",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutoencoderSection {
    /// Defaults to `[n_bins + 1, 4, n_bins + 1]` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_widths: Option<Vec<usize>>,
    pub activation: Activation,
    pub learning_rate: f64,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionSection {
    pub feature_space: FeatureSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Object confidence threshold for the training label list.
    pub alpha: f64,
    /// Action confidence threshold for the training action list.
    pub beta: f64,
    /// Frames per track segment.
    pub k_frames: usize,
    pub seed: u64,
    pub hmof: HmofConfig,
    pub ae: AutoencoderSection,
    pub gmm: GmmConfig,
    pub motion: MotionSection,
    pub fusion: FusionConfig,
}

impl PipelineConfig {
    pub fn preset(preset: Preset) -> Self {
        let (magnitude_cap, weights) = match preset {
            Preset::Umn => (
                1.8,
                BranchWeights {
                    obj: 1.0,
                    act: 1.5,
                    mot: 1.5,
                },
            ),
            Preset::Ped2 => (2.4, BranchWeights::uniform(1.0)),
        };
        PipelineConfig {
            alpha: 0.95,
            beta: 0.99,
            k_frames: 5,
            seed: 0,
            hmof: HmofConfig {
                n_bins: 8,
                magnitude_cap,
            },
            ae: AutoencoderSection {
                layer_widths: None,
                activation: Activation::Sigmoid,
                learning_rate: 1.0,
                epochs: 3000,
            },
            gmm: GmmConfig::default(),
            motion: MotionSection {
                feature_space: FeatureSpace::Reconstructed,
            },
            fusion: FusionConfig {
                weights,
                decision_threshold: 0.5,
                missing_branch: MissingBranchPolicy::Ignore,
                motion_flag_threshold: 0.5,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if self.k_frames == 0 {
            return Err(Error::Config("k_frames must be positive".into()));
        }
        self.hmof.validate()?;
        let ae = self.autoencoder();
        ae.validate()?;
        if ae.layer_widths[0] != self.hmof.feature_len() {
            return Err(Error::Config(format!(
                "ae.layer_widths must start and end with hmof.n_bins + 1 = {}, got {:?}",
                self.hmof.feature_len(),
                ae.layer_widths
            )));
        }
        self.gmm_config().validate()?;
        self.fusion.validate()
    }

    pub fn autoencoder(&self) -> AutoencoderConfig {
        let width = self.hmof.feature_len();
        AutoencoderConfig {
            layer_widths: self
                .ae
                .layer_widths
                .clone()
                .unwrap_or_else(|| vec![width, 4, width]),
            activation: self.ae.activation,
            learning_rate: self.ae.learning_rate,
            epochs: self.ae.epochs,
            seed: self.seed,
        }
    }

    pub fn gmm_config(&self) -> GmmConfig {
        GmmConfig {
            seed: self.seed,
            ..self.gmm.clone()
        }
    }

    /// Layers `text` over `fallback` (or over the preset named in the file).
    pub fn from_toml_str(text: &str, fallback: Preset) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let preset = match table.remove("preset") {
            Some(toml::Value::String(name)) => name.parse()?,
            Some(other) => {
                return Err(Error::Config(format!(
                    "preset must be a string, got {other}"
                )))
            }
            None => fallback,
        };
        Self::overlay(preset, table)
    }

    fn overlay(preset: Preset, table: toml::Table) -> Result<Self> {
        let mut base = toml::Table::try_from(Self::preset(preset))
            .map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut base, table);
        let cfg: PipelineConfig = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, fallback: Preset) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text, fallback)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_prefix(&e))))
    }

    /// Flat `section.key = value` lines, one per scalar.
    pub fn to_toml_string(&self) -> Result<String> {
        let table = toml::Table::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        let mut out = String::new();
        flatten("", &table, &mut out);
        Ok(out)
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut String) {
    for (key, value) in table {
        let name = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match value {
            toml::Value::Table(t) => flatten(&name, t, out),
            v => out.push_str(&format!("{name} = {v}\n")),
        }
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

fn merge(base: &mut toml::Table, overrides: toml::Table) {
    for (key, value) in overrides {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_carry_published_hyperparameters() {
        let umn = PipelineConfig::preset(Preset::Umn);
        assert_eq!((umn.alpha, umn.beta, umn.k_frames), (0.95, 0.99, 5));
        assert_eq!((umn.hmof.n_bins, umn.hmof.magnitude_cap), (8, 1.8));
        assert_eq!(
            umn.fusion.weights,
            BranchWeights {
                obj: 1.0,
                act: 1.5,
                mot: 1.5
            }
        );

        let ped2 = PipelineConfig::preset(Preset::Ped2);
        assert_eq!((ped2.hmof.n_bins, ped2.hmof.magnitude_cap), (8, 2.4));
        assert_eq!(ped2.fusion.weights, BranchWeights::uniform(1.0));
        assert_eq!((ped2.alpha, ped2.beta, ped2.k_frames), (0.95, 0.99, 5));
    }

    #[test]
    fn dotted_keys_override_preset() {
        let cfg = PipelineConfig::from_toml_str(
            "preset = \"umn\"\nseed = 7\nhmof.magnitude_cap = 2.0\nfusion.weights.obj = 2\n",
            Preset::Ped2,
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.hmof.magnitude_cap, 2.0);
        assert_eq!(cfg.fusion.weights.obj, 2.0);
        assert_eq!(cfg.fusion.weights.act, 1.5);
    }

    #[test]
    fn unknown_keys_are_errors() {
        for text in ["alpah = 0.9", "hmof.nbins = 8", "fusion.weights.motion = 1"] {
            let err = PipelineConfig::from_toml_str(text, Preset::Ped2).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{text}: {err}");
        }
    }

    #[test]
    fn invalid_values_are_errors() {
        assert!(PipelineConfig::from_toml_str("alpha = 1.0", Preset::Ped2).is_err());
        assert!(PipelineConfig::from_toml_str("hmof.n_bins = 6", Preset::Ped2).is_ok());
        assert!(PipelineConfig::from_toml_str(
            "hmof.n_bins = 6\nae.layer_widths = [9, 4, 9]",
            Preset::Ped2
        )
        .is_err());
        assert!(PipelineConfig::from_toml_str("preset = \"ucsd\"", Preset::Ped2).is_err());
    }

    #[test]
    fn effective_config_round_trips() {
        let cfg = PipelineConfig::preset(Preset::Umn);
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(
            PipelineConfig::from_toml_str(&text, Preset::Ped2).unwrap(),
            cfg
        );
    }
}
