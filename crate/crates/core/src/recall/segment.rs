use serde::{Deserialize, Serialize};

use super::retrieval::l2;
use crate::{Error, Result};

pub const DEFAULT_SMOOTH_WINDOW: usize = 5;
pub const DEFAULT_PAD: usize = 15;

/// Inclusive frame range of a demonstration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub lo: usize,
    pub hi: usize,
}

impl Segment {
    pub fn contains(&self, i: usize) -> bool {
        self.lo <= i && i <= self.hi
    }
}

/// For each demonstration frame, the distance to the nearest frame of one
/// failed rollout.
pub fn frame_distances(demo: &[Vec<f64>], rollout: &[Vec<f64>]) -> Result<Vec<f64>> {
    if rollout.is_empty() {
        return Err(Error::Input("rollout has no frames".into()));
    }
    Ok(demo.iter().map(|e| rollout.iter().map(|r| l2(e, r)).fold(f64::INFINITY, f64::min)).collect())
}

/// Centered moving average; the window shrinks at the edges.
pub fn smooth(d: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::Config(format!("smoothing window must be odd and positive, got {window}")));
    }
    let half = window / 2;
    let n = d.len();
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            d[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect())
}

/// How the in-band frames become a segment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentMode {
    /// Last in-band frame, padded.
    #[default]
    Anchor,
    /// First to last in-band frame, padded.
    Band,
}

/// The last frame whose distance lies in `[max/8, max/3]` (or the argmax if
/// no frame does), padded by `pad` on both sides and clipped to the demo.
pub fn separation_segment(d: &[f64], pad: usize) -> Option<Segment> {
    separation_segment_with(d, pad, SegmentMode::Anchor)
}

pub fn separation_segment_with(d: &[f64], pad: usize, mode: SegmentMode) -> Option<Segment> {
    let max = d.iter().copied().fold(0.0_f64, f64::max);
    if d.is_empty() || max <= 0.0 {
        return None;
    }
    let (lo, hi) = (max / 8.0, max / 3.0);
    let in_band = |x: &f64| *x >= lo && *x <= hi;
    let (first, last) = match d.iter().rposition(in_band) {
        Some(last) => {
            let first = match mode {
                SegmentMode::Anchor => last,
                SegmentMode::Band => d.iter().position(in_band).expect("band is non-empty"),
            };
            (first, last)
        }
        None => {
            // First index attaining the maximum.
            let a = d.iter().position(|&x| x == max).expect("max is attained");
            (a, a)
        }
    };
    Some(Segment { lo: first.saturating_sub(pad), hi: (last + pad).min(d.len() - 1) })
}
