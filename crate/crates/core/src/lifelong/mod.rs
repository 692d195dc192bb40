//! Sequential training over a task stream with pluggable continual-learning
//! strategies.
//!
//! The learner never sees task identifiers. Only two places consume the
//! harness-held `eval_task_id`: quota admission into episodic memory and
//! PackNet's per-task inference masks. Both are marked as oracle paths.

mod agem;
mod eval;
mod ewc;
mod packnet;
mod train;

use serde::{Deserialize, Serialize};

pub use agem::agem_project;
pub use eval::{evaluate, rollout_episodes, success_rate, EpisodeStream};
pub use ewc::{estimate_fisher, ewc_penalty, EwcAnchor};
pub use packnet::PacknetMasks;
pub use train::{train_task, Probe, StrategyState, TrainEvent, TrainOutcome};

use crate::policy::AdamW;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Naive,
    #[default]
    Er,
    Ewc,
    Agem,
    Packnet,
}

impl StrategyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Naive => "naive",
            StrategyKind::Er => "er",
            StrategyKind::Ewc => "ewc",
            StrategyKind::Agem => "agem",
            StrategyKind::Packnet => "packnet",
        }
    }

    /// Upper-case label used in tables.
    pub fn label(self) -> &'static str {
        match self {
            StrategyKind::Naive => "Sequential",
            StrategyKind::Er => "ER",
            StrategyKind::Ewc => "EWC",
            StrategyKind::Agem => "AGEM",
            StrategyKind::Packnet => "PackNet",
        }
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(StrategyKind::Naive),
            "er" => Ok(StrategyKind::Er),
            "ewc" => Ok(StrategyKind::Ewc),
            "agem" => Ok(StrategyKind::Agem),
            "packnet" => Ok(StrategyKind::Packnet),
            other => Err(Error::Config(format!("unknown strategy `{other}`"))),
        }
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrategyConfig {
    /// Chosen per experiment cell; not read from configuration files.
    #[serde(skip)]
    pub kind: StrategyKind,
    /// Fraction of each ER batch drawn from memory.
    pub er_mix: f64,
    pub ewc_lambda: f64,
    pub ewc_fisher_batches: usize,
    pub packnet_prune_frac: f64,
    pub packnet_posttrain_epochs: usize,
    /// A task needs at least this fraction of all parameters still free.
    pub packnet_min_free_frac: f64,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            kind: StrategyKind::default(),
            er_mix: 0.5,
            ewc_lambda: 5e4,
            ewc_fisher_batches: 16,
            packnet_prune_frac: 0.75,
            packnet_posttrain_epochs: 5,
            packnet_min_free_frac: 0.01,
        }
    }
}

impl StrategyConfig {
    pub fn with_kind(kind: StrategyKind) -> Self {
        Self { kind, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let frac = |x: f64| (0.0..=1.0).contains(&x);
        if !frac(self.er_mix) || !frac(self.packnet_prune_frac) || !frac(self.packnet_min_free_frac) {
            return Err(Error::Config("strategy fractions must lie in [0, 1]".into()));
        }
        if !(self.ewc_lambda >= 0.0) {
            return Err(Error::Config("ewc_lambda must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamW,
    pub grad_clip: f64,
    pub loss_scale: f64,
    /// Probe the current task every this many epochs; 0 disables probing.
    pub eval_every: usize,
    pub probe_episodes: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            optimizer: AdamW::default(),
            grad_clip: 100.0,
            loss_scale: 1.0,
            eval_every: 10,
            probe_episodes: 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.grad_clip > 0.0) || !(self.loss_scale > 0.0) {
            return Err(Error::Config("grad_clip and loss_scale must be positive".into()));
        }
        self.optimizer.validate()
    }
}
