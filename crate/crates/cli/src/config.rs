//! Pipeline configuration: a TOML file checked into each run directory,
//! with every field overridable from the command line (command line
//! wins).

use std::path::Path;

use kg_hait::bootstrap::BootstrapConfig;
use kg_hait::hif::{DpConfig, SemiringKind};
use kg_hait::model::{InitKind, LossKind, ModelKind, Norm, TrainConfig};
use kg_hait::squeeze::SqueezeConfig;
use kg_hait::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub data: DataSection,
    pub hif: HifSection,
    pub squeeze: SqueezeSection,
    pub bootstrap: BootstrapSection,
    pub train: TrainSection,
    pub grid: GridSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            data: DataSection::default(),
            hif: HifSection::default(),
            squeeze: SqueezeSection::default(),
            bootstrap: BootstrapSection::default(),
            train: TrainSection::default(),
            grid: GridSection::default(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub dataset: Option<String>,
    pub train: Option<String>,
    pub valid: Option<String>,
    pub test: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HifSection {
    pub iterations: usize,
    pub alpha: f64,
    pub semiring: SemiringKind,
    pub reinject_identity: bool,
}

impl Default for HifSection {
    fn default() -> Self {
        let dp = DpConfig::default();
        Self {
            iterations: dp.iterations,
            alpha: dp.alpha,
            semiring: dp.semiring,
            reinject_identity: dp.include_identity_each_step,
        }
    }
}

impl HifSection {
    pub fn to_dp_config(&self) -> DpConfig {
        DpConfig {
            iterations: self.iterations,
            alpha: self.alpha,
            semiring: self.semiring,
            include_identity_each_step: self.reinject_identity,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqueezeSection {
    pub lr: f64,
    pub max_iters: usize,
    pub target_loss: f64,
    pub plateau_window: usize,
    pub plateau_tol: f64,
}

impl Default for SqueezeSection {
    fn default() -> Self {
        let s = SqueezeConfig::default();
        Self {
            lr: s.lr,
            max_iters: s.max_iters,
            target_loss: s.target_loss,
            plateau_window: s.plateau_window,
            plateau_tol: s.plateau_tol,
        }
    }
}

impl SqueezeSection {
    pub fn to_config(&self, output_dim: usize, seed: u64) -> SqueezeConfig {
        SqueezeConfig {
            output_dim,
            lr: self.lr,
            max_iters: self.max_iters,
            target_loss: self.target_loss,
            plateau_window: self.plateau_window,
            plateau_tol: self.plateau_tol,
            seed,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapSection {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub loss: LossKind,
    pub margin: f64,
    pub negatives: usize,
    pub plateau_tol: f64,
    pub plateau_window: usize,
}

impl Default for BootstrapSection {
    fn default() -> Self {
        let b = BootstrapConfig::default();
        Self {
            epochs: b.epochs,
            lr: b.lr,
            batch_size: b.batch_size,
            loss: b.loss,
            margin: b.margin,
            negatives: b.negatives_per_positive,
            plateau_tol: b.plateau_tol,
            plateau_window: b.plateau_window,
        }
    }
}

impl BootstrapSection {
    pub fn to_config(&self, relation_dim: usize, norm: Norm, seed: u64) -> BootstrapConfig {
        BootstrapConfig {
            relation_dim,
            epochs: self.epochs,
            lr: self.lr,
            batch_size: self.batch_size,
            seed,
            norm,
            loss: self.loss,
            margin: self.margin,
            negatives_per_positive: self.negatives,
            plateau_tol: self.plateau_tol,
            plateau_window: self.plateau_window,
        }
    }
}

/// Training defaults: mini-batches of 2000 with Adam, 100-dimensional
/// embeddings, validation every 25 epochs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub model: ModelKind,
    pub norm: Norm,
    pub margin: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub entity_dim: usize,
    pub relation_dim: usize,
    pub eval_every: usize,
    pub patience: usize,
    /// 0 evaluates the full validation split.
    pub eval_sample: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            model: ModelKind::TransE,
            norm: Norm::L2,
            margin: 1.0,
            lr: 5e-4,
            batch_size: 2000,
            epochs: 500,
            negatives: 1,
            entity_dim: 100,
            relation_dim: 100,
            eval_every: 25,
            patience: 5,
            eval_sample: 0,
        }
    }
}

impl TrainSection {
    pub fn to_config(&self, init: InitKind, seed: u64) -> TrainConfig {
        TrainConfig {
            model: self.model,
            norm: self.norm,
            loss: LossKind::MarginRanking,
            margin: self.margin,
            lr: self.lr,
            batch_size: self.batch_size,
            epochs: self.epochs,
            negatives_per_positive: self.negatives,
            seed,
            freeze_entities: false,
            init,
            entity_dim: self.entity_dim,
            relation_dim: self.relation_dim,
            eval_every: self.eval_every,
            patience: self.patience,
            eval_sample: (self.eval_sample > 0).then_some(self.eval_sample),
            loss_plateau: None,
        }
    }
}

/// Hyperparameter grid: norm x DP horizon x learning rate.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub norms: Vec<Norm>,
    pub iterations: Vec<usize>,
    pub lrs: Vec<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            norms: vec![Norm::L1, Norm::L2],
            iterations: vec![2, 4, 6, 8, 12],
            lrs: vec![0.002, 0.0005, 0.0002],
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config '{}': {e}", path.display()))
        })?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("bad config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Stable content hash of the resolved configuration.
    pub fn hash(&self) -> u64 {
        fnv1a64(self.to_toml().as_bytes())
    }
}

pub fn fnv1a64(data: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in data {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
