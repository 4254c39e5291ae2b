//! Experiment configuration: dataset paths, the label list, grid axes and
//! the model/pretrain/train blocks, loaded from a JSON file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::{stable_hash64, StableHasher};
use crate::model::{ModelConfig, TrainConfig};
use crate::pretrain::PretrainConfig;
use crate::strategies::{StrategyKind, StudentInit};

fn default_max_len() -> usize {
    crate::corpus::DEFAULT_MAX_LEN
}

fn default_vocab_max_size() -> usize {
    8192
}

fn default_min_freq() -> usize {
    1
}

/// Architecture and vectorization settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBlock {
    #[serde(default = "ModelBlock::default_embedding_dim")]
    pub embedding_dim: usize,
    #[serde(default = "ModelBlock::default_hidden_dim")]
    pub hidden_dim: usize,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[serde(default = "default_vocab_max_size")]
    pub vocab_max_size: usize,
    #[serde(default = "default_min_freq")]
    pub vocab_min_freq: usize,
}

impl ModelBlock {
    fn default_embedding_dim() -> usize {
        64
    }
    fn default_hidden_dim() -> usize {
        64
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            embedding_dim: self.embedding_dim,
            hidden_dim: self.hidden_dim,
        }
    }
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self {
            embedding_dim: Self::default_embedding_dim(),
            hidden_dim: Self::default_hidden_dim(),
            max_len: default_max_len(),
            vocab_max_size: default_vocab_max_size(),
            vocab_min_freq: default_min_freq(),
        }
    }
}

/// Pretraining settings; `enabled: false` runs pseudo-label-only pipelines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainBlock {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "PretrainBlock::default_mask_rate")]
    pub mask_rate: f64,
    #[serde(default = "PretrainBlock::default_context_window")]
    pub context_window: usize,
    #[serde(default = "PretrainBlock::default_epochs")]
    pub epochs: usize,
    #[serde(default = "PretrainBlock::default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "PretrainBlock::default_negative_samples")]
    pub negative_samples: usize,
}

impl PretrainBlock {
    fn default_mask_rate() -> f64 {
        0.15
    }
    fn default_context_window() -> usize {
        5
    }
    fn default_epochs() -> usize {
        3
    }
    fn default_learning_rate() -> f64 {
        0.05
    }
    fn default_negative_samples() -> usize {
        10
    }

    pub fn pretrain_config(&self, embedding_dim: usize, seed: u64) -> PretrainConfig {
        PretrainConfig {
            mask_rate: self.mask_rate,
            context_window: self.context_window,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            seed,
            negative_samples: self.negative_samples,
            embedding_dim,
        }
    }
}

impl Default for PretrainBlock {
    fn default() -> Self {
        Self {
            enabled: false,
            mask_rate: Self::default_mask_rate(),
            context_window: Self::default_context_window(),
            epochs: Self::default_epochs(),
            learning_rate: Self::default_learning_rate(),
            negative_samples: Self::default_negative_samples(),
        }
    }
}

/// Optimizer settings; the seed is filled in per cell by the runner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainBlock {
    #[serde(default = "TrainBlock::default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "TrainBlock::default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "TrainBlock::default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "TrainBlock::default_patience")]
    pub early_stop_patience: usize,
    #[serde(default = "TrainBlock::default_dropout")]
    pub dropout_rate: f64,
    #[serde(default = "TrainBlock::default_weight_decay")]
    pub weight_decay: f64,
    #[serde(default = "TrainBlock::default_warmup_frac")]
    pub warmup_frac: f64,
}

impl TrainBlock {
    fn default_learning_rate() -> f64 {
        0.01
    }
    fn default_batch_size() -> usize {
        16
    }
    fn default_max_epochs() -> usize {
        80
    }
    fn default_patience() -> usize {
        5
    }
    fn default_dropout() -> f64 {
        0.2
    }
    fn default_weight_decay() -> f64 {
        1e-3
    }
    fn default_warmup_frac() -> f64 {
        0.03
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            early_stop_patience: self.early_stop_patience,
            dropout_rate: self.dropout_rate,
            weight_decay: self.weight_decay,
            seed,
            ..TrainConfig::default()
        }
    }
}

impl Default for TrainBlock {
    fn default() -> Self {
        Self {
            learning_rate: Self::default_learning_rate(),
            batch_size: Self::default_batch_size(),
            max_epochs: Self::default_max_epochs(),
            early_stop_patience: Self::default_patience(),
            dropout_rate: Self::default_dropout(),
            weight_decay: Self::default_weight_decay(),
            warmup_frac: Self::default_warmup_frac(),
        }
    }
}

fn default_iterations() -> usize {
    1
}

/// Declarative sweep specification. `k_values` controls |D'| through the
/// top-K rule (|D'| is about K times the class count); a `k` of 0 selects
/// the naive rule that labels the whole pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub train_path: PathBuf,
    pub dev_path: PathBuf,
    pub test_path: PathBuf,
    pub pool_path: PathBuf,
    #[serde(default)]
    pub general_pool_path: Option<PathBuf>,
    /// Ordered class names; class index = position.
    pub labels: Vec<String>,

    pub d_sizes: Vec<usize>,
    pub k_values: Vec<usize>,
    pub u_sizes: Vec<usize>,
    pub strategies: Vec<String>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub student_init: StudentInit,

    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default)]
    pub pretrain: PretrainBlock,
    #[serde(default)]
    pub train: TrainBlock,

    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::ConfigInvalid {
                field: path.display().to_string(),
                reason: e.to_string(),
            })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let non_empty = |name: &str, empty: bool| -> Result<()> {
            if empty {
                Err(Error::ConfigInvalid {
                    field: name.to_string(),
                    reason: "must be non-empty".into(),
                })
            } else {
                Ok(())
            }
        };
        non_empty("labels", self.labels.is_empty())?;
        non_empty("d_sizes", self.d_sizes.is_empty())?;
        non_empty("k_values", self.k_values.is_empty())?;
        non_empty("u_sizes", self.u_sizes.is_empty())?;
        non_empty("strategies", self.strategies.is_empty())?;
        non_empty("seeds", self.seeds.is_empty())?;
        if self.labels.len() < 2 {
            return Err(Error::ConfigInvalid {
                field: "labels".into(),
                reason: "need at least two classes".into(),
            });
        }
        if self.iterations == 0 {
            return Err(Error::ConfigInvalid {
                field: "iterations".into(),
                reason: "must be >= 1".into(),
            });
        }
        for name in &self.strategies {
            if StrategyKind::parse(name).is_none() {
                return Err(Error::ConfigInvalid {
                    field: "strategies".into(),
                    reason: format!(
                        "unknown strategy {name:?}; expected one of {:?}",
                        StrategyKind::ALL
                            .iter()
                            .map(|k| k.config_name())
                            .collect::<Vec<_>>()
                    ),
                });
            }
        }
        self.train.train_config(0).validate()?;
        if self.pretrain.enabled {
            self.pretrain
                .pretrain_config(self.model.embedding_dim, 0)
                .validate()?;
        }
        let max_u = *self.u_sizes.iter().max().expect("non-empty");
        for &k in &self.k_values {
            if k * self.labels.len() > max_u {
                log::warn!(
                    "k={k} asks for {} pseudo-labels but the largest |U| is {max_u}; \
                     short classes will select fewer",
                    k * self.labels.len()
                );
            }
        }
        Ok(())
    }

    pub fn strategy_kinds(&self) -> Vec<StrategyKind> {
        self.strategies
            .iter()
            .map(|s| StrategyKind::parse(s).expect("validated"))
            .collect()
    }

    /// Hash of everything that affects a cell's computation besides its
    /// grid coordinates; folded into cell hashes so edited settings do not
    /// resume against stale records.
    pub fn settings_fingerprint(&self) -> u64 {
        let mut h = StableHasher::new();
        for label in &self.labels {
            h.update_str(label);
        }
        h.update_u64(self.iterations as u64);
        h.update_str(&serde_json::to_string(&self.student_init).expect("serializable"));
        h.update_str(&serde_json::to_string(&self.model).expect("serializable"));
        h.update_str(&serde_json::to_string(&self.pretrain).expect("serializable"));
        h.update_str(&serde_json::to_string(&self.train).expect("serializable"));
        h.finish()
    }

    /// Hash of the whole config document, recorded in the run manifest.
    pub fn config_hash(&self) -> u64 {
        stable_hash64(
            serde_json::to_string(self)
                .expect("serializable")
                .as_bytes(),
        )
    }
}
