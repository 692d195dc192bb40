use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::EncoderConfig;
use crate::seed::{self, fnv1a};
use crate::taskworld::is_function_word;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LanguageMode {
    /// Depends only on the multiset of content words.
    Cluster,
    /// Also mixes in function words and token positions.
    Noisy,
}

impl std::str::FromStr for LanguageMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cluster" => Ok(LanguageMode::Cluster),
            "noisy" => Ok(LanguageMode::Noisy),
            other => Err(Error::Config(format!("unknown language mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LanguageEncoder {
    mode: LanguageMode,
    dim: usize,
    hash_seed: u64,
    function_weight: f64,
    position_weight: f64,
}

/// Deterministic unit-norm Gaussian vector for a word.
pub fn hash_vector(word: &str, dim: usize, hash_seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(hash_seed, &[fnv1a(word.as_bytes())]);
    let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

impl LanguageEncoder {
    pub fn new(cfg: &EncoderConfig) -> Self {
        Self {
            mode: cfg.language_mode,
            dim: cfg.language_dim,
            hash_seed: seed::derive(cfg.seed, &[seed::tag::ENCODER, 1]),
            function_weight: cfg.function_weight,
            position_weight: cfg.position_weight,
        }
    }

    pub fn mode(&self) -> LanguageMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn encode(&self, tokens: &[String]) -> Result<Vec<f64>> {
        if tokens.is_empty() {
            return Err(Error::Input("cannot encode an empty description".into()));
        }
        let mut acc = vec![0.0; self.dim];
        let add = |acc: &mut [f64], word: &str, w: f64| {
            for (a, h) in acc.iter_mut().zip(hash_vector(word, self.dim, self.hash_seed)) {
                *a += w * h;
            }
        };
        // Summation order is fixed by sorting so that the content multiset
        // alone determines the bits of the embedding.
        let mut content: Vec<&str> = tokens.iter().map(String::as_str).filter(|t| !is_function_word(t)).collect();
        content.sort_unstable();
        for tok in content {
            add(&mut acc, tok, 1.0);
        }
        if self.mode == LanguageMode::Noisy {
            for (pos, tok) in tokens.iter().enumerate() {
                if is_function_word(tok) {
                    add(&mut acc, tok, self.function_weight);
                }
                add(&mut acc, &format!("{tok}@{pos}"), self.position_weight);
            }
        }
        let n = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 {
            // Only reachable when every token is a function word in cluster mode.
            return Err(Error::Input("description has no content words".into()));
        }
        acc.iter_mut().for_each(|x| *x /= n);
        Ok(acc)
    }
}
