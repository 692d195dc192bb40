//! Frozen embedding stand-ins. Nothing here is trainable: every encoder is a
//! pure function of its construction seed and its input.

mod language;
mod pca;
mod vision;

use serde::{Deserialize, Serialize};

pub use language::{hash_vector, LanguageEncoder, LanguageMode};
pub use pca::{pca2, silhouette};
pub use vision::VisionEncoder;

/// Dimensions used by the full-size configuration.
pub const FULL_VISION_DIM: usize = 512;
pub const FULL_LANGUAGE_DIM: usize = 384;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderConfig {
    pub seed: u64,
    pub vision_dim: usize,
    pub language_dim: usize,
    pub language_mode: LanguageMode,
    /// Noisy mode only: weight of function-word hash vectors.
    pub function_weight: f64,
    /// Noisy mode only: weight of position-salted token vectors.
    pub position_weight: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            vision_dim: 32,
            language_dim: 32,
            language_mode: LanguageMode::Cluster,
            function_weight: 0.6,
            position_weight: 0.6,
        }
    }
}

impl EncoderConfig {
    pub fn full_size() -> Self {
        Self { vision_dim: FULL_VISION_DIM, language_dim: FULL_LANGUAGE_DIM, ..Self::default() }
    }
}

/// The pair of frozen encoders consumed by data collection, the policy and
/// retrieval.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoders {
    pub vision: VisionEncoder,
    pub language: LanguageEncoder,
}

impl Encoders {
    pub fn new(cfg: &EncoderConfig, obs_len: usize) -> Self {
        Self { vision: VisionEncoder::new(cfg.seed, cfg.vision_dim, obs_len), language: LanguageEncoder::new(cfg) }
    }
}
