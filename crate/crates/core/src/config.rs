//! Sectioned run configuration read from a TOML file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::churnmodel::{LossWeights, ModelConfig};
use crate::ctxwalk::WalkConfig;
use crate::edgefeat::InteractionColumn;
use crate::error::{Error, Result};
use crate::pipeline::EvalConfig;
use crate::synthgen::SynthConfig;
use crate::trainer::{TrainConfig, TrainMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Dataset directory for read commands.
    pub dir: PathBuf,
    /// Churn window `T`; the dataset's stored value when unset.
    #[serde(rename = "T", alias = "window")]
    pub window: Option<u32>,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            dir: PathBuf::from("data"),
            window: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesSection {
    /// Replaces the dataset's interaction columns when set.
    pub interactions: Option<Vec<InteractionColumn>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    #[serde(alias = "batch")]
    pub batch_size: usize,
    pub eta0: f64,
    pub mode: TrainMode,
    pub seed: u64,
    pub shards: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            epochs: t.epochs,
            batch_size: t.batch_size,
            eta0: t.eta0,
            mode: t.mode,
            seed: t.seed,
            shards: t.shards,
        }
    }
}

/// Layer widths; the embedding size is `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub m: usize,
    /// Hidden widths before the embedding layer.
    pub embed_hidden: Vec<usize>,
    /// Hidden widths of the prediction stack.
    pub pred_hidden: Vec<usize>,
}

impl Default for ModelSection {
    fn default() -> Self {
        let c = ModelConfig::default();
        ModelSection {
            m: *c.embed_dims.last().expect("default embedding width"),
            embed_hidden: c.embed_dims[..c.embed_dims.len() - 1].to_vec(),
            pred_hidden: c.pred_dims,
        }
    }
}

impl ModelSection {
    pub fn model_config(&self) -> ModelConfig {
        let mut embed_dims = self.embed_hidden.clone();
        embed_dims.push(self.m);
        ModelConfig {
            embed_dims,
            pred_dims: self.pred_hidden.clone(),
        }
    }
}

/// Every setting a command may need, with defaults for all of them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSection,
    pub features: FeaturesSection,
    pub walk: WalkConfig,
    pub loss: LossWeights,
    pub train: TrainSection,
    pub model: ModelSection,
    pub synth: SynthConfig,
    pub eval: EvalConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::parse("config", e.to_string()))
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            batch_size: self.train.batch_size,
            eta0: self.train.eta0,
            mode: self.train.mode,
            seed: self.train.seed,
            loss_weights: self.loss.clone(),
            walk: self.walk.clone(),
            model: self.model.model_config(),
            shards: self.train.shards,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.model.m == 0 || self.model.embed_hidden.contains(&0) || self.model.pred_hidden.contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if self.data.window == Some(0) {
            return Err(Error::Config("churn window T must be at least 1".into()));
        }
        if !(self.eval.train_fraction > 0.0 && self.eval.train_fraction < 1.0) {
            return Err(Error::Config("train_fraction must lie in (0, 1)".into()));
        }
        self.train_config().validate()?;
        self.synth.validate()
    }

    /// Fails unless the dataset directory holds the files read commands need.
    pub fn require_dataset(&self) -> Result<()> {
        for f in [
            crate::dataset::PLAYS_FILE,
            crate::dataset::FEATURES_FILE,
            crate::dataset::META_FILE,
        ] {
            let p = self.data.dir.join(f);
            if !p.is_file() {
                return Err(Error::Config(format!("missing dataset file {}", p.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let t = cfg.train_config();
        assert_eq!(t.loss_weights.alpha, 0.02);
        assert_eq!(t.loss_weights.beta, 0.01);
        assert_eq!(t.loss_weights.gamma, 1e-5);
        assert_eq!(t.walk.epsilon, 1.0);
        assert_eq!(t.walk.p, 1.0);
        assert_eq!(t.walk.q, 0.05);
        assert_eq!(t.walk.contexts_per_edge, 4);
        assert_eq!(t.model.embed_dims, vec![50]);
        assert_eq!(t.batch_size, 1024);
        assert_eq!(cfg.synth.window, 14);
    }

    #[test]
    fn named_keys_override_defaults() {
        let cfg = RunConfig::from_toml(
            "[loss]\nalpha = 0.5\nbeta = 0.0\n[train]\nbatch = 64\nmode = \"alternate_train\"\n\
             [model]\nm = 8\n[data]\nT = 7\n",
        )
        .unwrap();
        assert_eq!(cfg.loss.alpha, 0.5);
        assert_eq!(cfg.train.batch_size, 64);
        assert_eq!(cfg.train.mode, TrainMode::AlternateTrain);
        assert_eq!(cfg.train_config().model.embed_dims, vec![8]);
        assert_eq!(cfg.data.window, Some(7));
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert!(RunConfig::from_toml("[train]\nepoch = 3\n").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn invalid_values_fail_validation() {
        let mut cfg = RunConfig::default();
        cfg.loss.alpha = -1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.eval.train_fraction = 1.0;
        assert!(cfg.validate().is_err());
    }
}
