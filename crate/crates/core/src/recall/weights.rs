use serde::{Deserialize, Serialize};

use super::segment::Segment;
use crate::{Error, Result};

pub const BASE_WEIGHT: f64 = 1.0;
pub const SEGMENT_INCREMENT: f64 = 0.3;
pub const WEIGHT_CLIP: f64 = 2.0;
/// At most this many failed rollouts contribute to one demonstration.
pub const MAX_SEGMENTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightRule {
    pub base: f64,
    pub inc: f64,
    pub clip_max: f64,
}

impl Default for WeightRule {
    fn default() -> Self {
        Self { base: BASE_WEIGHT, inc: SEGMENT_INCREMENT, clip_max: WEIGHT_CLIP }
    }
}

/// Per-frame sample weights of one retrieved demonstration, mean 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub weights: Vec<f64>,
    /// Segments that contributed, in rollout order.
    pub provenance: Vec<Segment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightStats {
    pub min: f64,
    pub max: f64,
    /// Frames covered by at least one segment.
    pub boosted: usize,
}

impl WeightVector {
    pub fn uniform(len: usize) -> Self {
        Self { weights: vec![1.0; len], provenance: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn stats(&self) -> WeightStats {
        let min = self.weights.iter().copied().fold(f64::INFINITY, f64::min);
        let max = self.weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let boosted = (0..self.len()).filter(|&i| self.provenance.iter().any(|s| s.contains(i))).count();
        WeightStats { min, max, boosted }
    }
}

/// Pre-normalisation weights: `base + inc` per covering segment, clipped.
pub fn raw_weights(demo_len: usize, segments: &[Segment], rule: &WeightRule) -> Result<Vec<f64>> {
    if demo_len == 0 {
        return Err(Error::Input("cannot weight an empty demonstration".into()));
    }
    let mut w = vec![rule.base; demo_len];
    for s in segments.iter().take(MAX_SEGMENTS) {
        if s.lo > s.hi || s.hi >= demo_len {
            return Err(Error::Input(format!(
                "segment [{}, {}] outside a demonstration of {demo_len} frames",
                s.lo, s.hi
            )));
        }
        w[s.lo..=s.hi].iter_mut().for_each(|x| *x += rule.inc);
    }
    w.iter_mut().for_each(|x| *x = x.min(rule.clip_max));
    Ok(w)
}

/// Weights for one demonstration given the segments of its failed rollouts.
/// Only the first [`MAX_SEGMENTS`] segments are used.
pub fn build_weights(demo_len: usize, segments: &[Segment], rule: &WeightRule) -> Result<WeightVector> {
    let raw = raw_weights(demo_len, segments, rule)?;
    let mean = raw.iter().sum::<f64>() / demo_len as f64;
    Ok(WeightVector {
        weights: raw.iter().map(|x| x / mean).collect(),
        provenance: segments.iter().take(MAX_SEGMENTS).copied().collect(),
    })
}
