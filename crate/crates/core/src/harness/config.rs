use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::encoders::EncoderConfig;
use crate::lifelong::{StrategyConfig, StrategyKind, TrainConfig};
use crate::memory::Admission;
use crate::policy::PolicyConfig;
use crate::recall::{
    AdaptConfig, Adaptation, RecallConfig, SegmentMode, WeightRule, DEFAULT_PAD, DEFAULT_QUIZ_EPISODES,
    DEFAULT_SMOOTH_WINDOW,
};
use crate::taskworld::Family;
use crate::{Error, Result};

pub const DEFAULT_SEEDS: [u64; 3] = [1, 21, 42];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSection {
    pub family: Family,
    pub n_tasks: usize,
    /// Layout seed of the benchmark; shared by every replica seed.
    pub seed: u64,
    pub paraphrases: usize,
}

impl Default for SuiteSection {
    fn default() -> Self {
        Self { family: Family::Spatial, n_tasks: 5, seed: 0, paraphrases: crate::taskworld::DEFAULT_PARAPHRASES }
    }
}

/// Network shape; input sizes follow the encoders and the init seed follows
/// the replica seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicySection {
    pub window: usize,
    pub hidden: usize,
    pub modes: usize,
    pub sigma_min: f64,
}

impl Default for PolicySection {
    fn default() -> Self {
        let p = PolicyConfig::default();
        Self { window: p.window, hidden: p.hidden, modes: p.modes, sigma_min: p.sigma_min }
    }
}

/// Retrieval weights default to the family's values when left out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSection {
    pub alpha_v: Option<f64>,
    pub alpha_l: Option<f64>,
    pub frac: f64,
}

impl Default for RetrievalSection {
    fn default() -> Self {
        Self { alpha_v: None, alpha_l: None, frac: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecallSection {
    pub quiz_episodes: usize,
    pub test_episodes: usize,
    pub smooth_window: usize,
    pub pad: usize,
    pub segment_mode: SegmentMode,
    pub weights: WeightRule,
    /// Wall-clock times make reruns differ, so they are off by default.
    pub record_wall_time: bool,
}

impl Default for RecallSection {
    fn default() -> Self {
        Self {
            quiz_episodes: DEFAULT_QUIZ_EPISODES,
            test_episodes: 20,
            smooth_window: DEFAULT_SMOOTH_WINDOW,
            pad: DEFAULT_PAD,
            segment_mode: SegmentMode::Anchor,
            weights: WeightRule::default(),
            record_wall_time: false,
        }
    }
}

/// One experiment: a suite, replica seeds, strategies and adaptation
/// variants. Every field takes part in the run hash except `output_dir`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub strategies: Vec<StrategyKind>,
    pub variants: Vec<Adaptation>,
    pub demos_per_task: usize,
    /// Episodes per (task, checkpoint) in the success matrix.
    pub eval_episodes: usize,
    pub suite: SuiteSection,
    pub encoder: EncoderConfig,
    pub policy: PolicySection,
    pub strategy: StrategyConfig,
    pub train: TrainConfig,
    pub memory: Admission,
    pub retrieval: RetrievalSection,
    pub recall: RecallSection,
    pub adapt: AdaptConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("runs"),
            seeds: DEFAULT_SEEDS.to_vec(),
            strategies: vec![StrategyKind::Ewc, StrategyKind::Agem, StrategyKind::Er, StrategyKind::Packnet],
            variants: vec![Adaptation::None, Adaptation::Uniform, Adaptation::Weighted],
            demos_per_task: 50,
            eval_episodes: 20,
            suite: SuiteSection::default(),
            encoder: EncoderConfig::default(),
            policy: PolicySection::default(),
            strategy: StrategyConfig::default(),
            train: TrainConfig::default(),
            memory: Admission::default(),
            retrieval: RetrievalSection::default(),
            recall: RecallSection::default(),
            adapt: AdaptConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("at least one strategy is required".into()));
        }
        if self.demos_per_task == 0 {
            return Err(Error::Config("demos_per_task must be positive".into()));
        }
        if self.suite.n_tasks == 0 || self.suite.paraphrases == 0 {
            return Err(Error::Config("suite needs at least one task and one paraphrase".into()));
        }
        let p = &self.policy;
        if p.window == 0 || p.hidden == 0 || p.modes == 0 || !(p.sigma_min > 0.0) {
            return Err(Error::Config("policy window, hidden, modes and sigma_min must be positive".into()));
        }
        if self.encoder.vision_dim == 0 || self.encoder.language_dim == 0 {
            return Err(Error::Config("encoder dimensions must be positive".into()));
        }
        match self.memory {
            Admission::OracleQuota { per_task: 0 } | Admission::Reservoir { capacity: 0 } => {
                return Err(Error::Config("memory capacity must be positive".into()))
            }
            _ => {}
        }
        self.strategy.validate()?;
        self.train.validate()?;
        self.recall_config().validate()
    }

    pub fn policy_config(&self, seed: u64) -> PolicyConfig {
        PolicyConfig {
            window: self.policy.window,
            hidden: self.policy.hidden,
            modes: self.policy.modes,
            sigma_min: self.policy.sigma_min,
            vision_dim: self.encoder.vision_dim,
            language_dim: self.encoder.language_dim,
            init_seed: crate::seed::derive(seed, &[crate::seed::tag::INIT]),
        }
    }

    pub fn recall_config(&self) -> RecallConfig {
        let (dv, dl) = self.suite.family.default_alphas();
        let r = &self.recall;
        RecallConfig {
            alpha_v: self.retrieval.alpha_v.unwrap_or(dv),
            alpha_l: self.retrieval.alpha_l.unwrap_or(dl),
            frac: self.retrieval.frac,
            quiz_episodes: r.quiz_episodes,
            test_episodes: r.test_episodes,
            smooth_window: r.smooth_window,
            pad: r.pad,
            segment_mode: r.segment_mode,
            weights: r.weights,
            adapt: self.adapt,
            record_wall_time: r.record_wall_time,
        }
    }

    pub fn strategy_config(&self, kind: StrategyKind) -> StrategyConfig {
        StrategyConfig { kind, ..self.strategy }
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&canon).expect("config serialises");
        hex::encode(Sha256::digest(&bytes))[..16].to_string()
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(self.hash())
    }

    pub fn seed_dir(&self, seed: u64) -> PathBuf {
        self.run_dir().join(seed.to_string())
    }
}
