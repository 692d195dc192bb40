//! Deployment-time recall: quiz the policy on the encountered task, retrieve
//! similar demonstrations from episodic memory, locate where they separate
//! from the failed quiz rollouts, and fine-tune a local copy of the policy on
//! the weighted frames.

mod adapt;
mod retrieval;
mod segment;
mod weights;

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

pub use adapt::{local_adapt, quiz, AdaptConfig, AdaptationBatchSet, DEFAULT_ADAPT_EPOCHS, DEFAULT_QUIZ_EPISODES};
pub use retrieval::{l2, retrieval_count, retrieval_distance, retrieve, retrieve_indices, RetrievalQuery};
pub use segment::{
    frame_distances, separation_segment, separation_segment_with, smooth, Segment, SegmentMode, DEFAULT_PAD,
    DEFAULT_SMOOTH_WINDOW,
};
pub use weights::{
    build_weights, raw_weights, WeightRule, WeightStats, WeightVector, BASE_WEIGHT, MAX_SEGMENTS, SEGMENT_INCREMENT,
    WEIGHT_CLIP,
};

pub use crate::rollout::RolloutRecord;

use crate::encoders::Encoders;
use crate::lifelong::{rollout_episodes, EpisodeStream};
use crate::memory::EpisodicMemory;
use crate::policy::{PolicyController, PolicyParams};
use crate::seed::{self, tag};
use crate::taskworld::{initial_state, observe, Family, TaskSpec};
use crate::{Error, Result};

/// How the retrieved demonstrations are used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adaptation {
    /// Separation-segment weights.
    Weighted,
    /// Every retrieved frame weighted one.
    Uniform,
    /// Evaluate the lifelong policy as is.
    None,
}

impl Adaptation {
    pub fn label(self) -> &'static str {
        match self {
            Adaptation::Weighted => "WLA",
            Adaptation::Uniform => "ULA",
            Adaptation::None => "none",
        }
    }
}

impl std::str::FromStr for Adaptation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wla" | "weighted" => Ok(Adaptation::Weighted),
            "ula" | "uniform" => Ok(Adaptation::Uniform),
            "none" => Ok(Adaptation::None),
            _ => Err(Error::Config(format!("unknown adaptation variant '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecallConfig {
    pub alpha_v: f64,
    pub alpha_l: f64,
    pub frac: f64,
    pub quiz_episodes: usize,
    pub test_episodes: usize,
    pub smooth_window: usize,
    pub pad: usize,
    pub segment_mode: SegmentMode,
    pub weights: WeightRule,
    pub adapt: AdaptConfig,
    pub record_wall_time: bool,
}

impl Default for RecallConfig {
    fn default() -> Self {
        let (alpha_v, alpha_l) = Family::Spatial.default_alphas();
        Self {
            alpha_v,
            alpha_l,
            frac: 0.1,
            quiz_episodes: DEFAULT_QUIZ_EPISODES,
            test_episodes: 20,
            smooth_window: DEFAULT_SMOOTH_WINDOW,
            pad: DEFAULT_PAD,
            segment_mode: SegmentMode::Anchor,
            weights: WeightRule::default(),
            adapt: AdaptConfig::default(),
            record_wall_time: false,
        }
    }
}

impl RecallConfig {
    pub fn for_family(family: Family) -> Self {
        let (alpha_v, alpha_l) = family.default_alphas();
        Self { alpha_v, alpha_l, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.smooth_window == 0 || self.smooth_window.is_multiple_of(2) {
            return Err(Error::Config("smooth_window must be odd and positive".into()));
        }
        let w = &self.weights;
        if !(w.base > 0.0 && w.inc >= 0.0 && w.clip_max >= w.base) {
            return Err(Error::Config("weight rule needs base > 0, inc >= 0, clip_max >= base".into()));
        }
        self.adapt.validate()?;
        RetrievalQuery {
            scene_embed: Vec::new(),
            lang_embed: Vec::new(),
            alpha_v: self.alpha_v,
            alpha_l: self.alpha_l,
            frac: self.frac,
        }
        .validate()
    }
}

/// Outcome of the deployment pipeline on one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task_index: usize,
    pub variant: Adaptation,
    pub quiz_rate: f64,
    pub n_failed: usize,
    /// Memory indices, nearest first.
    pub retrieved_ids: Vec<usize>,
    /// Ground-truth task of each retrieved demonstration (evaluation only).
    pub retrieved_tasks: Vec<usize>,
    pub retrieval_accuracy: f64,
    pub segments: Vec<Vec<Segment>>,
    pub weight_stats: Vec<WeightStats>,
    pub final_rate: f64,
    /// Per-episode outcomes behind `final_rate`.
    pub final_successes: Vec<bool>,
    pub wall_time: Option<f64>,
}

/// The scene and goal the agent observes when it meets `task`, drawn from a
/// stream separate from quiz and test episodes.
pub fn task_query(task: &TaskSpec, encoders: &Encoders, cfg: &RecallConfig, seed: u64) -> Result<RetrievalQuery> {
    let ep_seed = seed::derive(seed, &[tag::QUERY, task.eval_task_id as u64]);
    let mut rng = seed::rng(ep_seed, &[tag::QUERY]);
    let description = &task.descriptions[rng.random_range(0..task.descriptions.len())];
    let state = initial_state(task, ep_seed);
    Ok(RetrievalQuery {
        scene_embed: encoders.vision.encode(&observe(&state))?,
        lang_embed: encoders.language.encode(description)?,
        alpha_v: cfg.alpha_v,
        alpha_l: cfg.alpha_l,
        frac: cfg.frac,
    })
}

/// Separation segments of one demonstration against each failed rollout,
/// in rollout order, at most [`MAX_SEGMENTS`].
pub fn demo_segments(demo_embeds: &[Vec<f64>], failed: &[&RolloutRecord], cfg: &RecallConfig) -> Result<Vec<Segment>> {
    let mut out = Vec::new();
    for r in failed.iter().take(MAX_SEGMENTS) {
        let d = smooth(&frame_distances(demo_embeds, &r.vision_embeds)?, cfg.smooth_window)?;
        out.extend(separation_segment_with(&d, cfg.pad, cfg.segment_mode));
    }
    Ok(out)
}

/// Success of each final-test episode. Final tests share the evaluation
/// stream, so an unadapted policy scores exactly its evaluation rate.
pub fn test_outcomes(
    params: &PolicyParams,
    task: &TaskSpec,
    episodes: usize,
    encoders: &Encoders,
    seed: u64,
) -> Result<Vec<bool>> {
    let mut c = PolicyController::new(params);
    let recs = rollout_episodes(task, &mut c, encoders, episodes, seed, EpisodeStream::Eval)?;
    Ok(recs.iter().map(|r| r.success).collect())
}

/// Fraction of `true` entries; zero for an empty slice.
pub fn rate(outcomes: &[bool]) -> f64 {
    if outcomes.is_empty() {
        return 0.0;
    }
    outcomes.iter().filter(|&&s| s).count() as f64 / outcomes.len() as f64
}

/// Quiz, retrieve, weight, adapt a copy of `params`, and test it.
#[allow(clippy::too_many_arguments)]
pub fn adapt_and_test(
    params: &PolicyParams,
    mem: &EpisodicMemory,
    task: &TaskSpec,
    task_index: usize,
    encoders: &Encoders,
    cfg: &RecallConfig,
    variant: Adaptation,
    seed: u64,
) -> Result<TaskReport> {
    cfg.validate()?;
    let start = Instant::now();
    let quiz_recs = quiz(params, task, cfg.quiz_episodes, encoders, seed)?;
    let failed: Vec<&RolloutRecord> = quiz_recs.iter().filter(|r| !r.success).collect();
    let quiz_rate = rate(&quiz_recs.iter().map(|r| r.success).collect::<Vec<_>>());

    let query = task_query(task, encoders, cfg, seed)?;
    let ids = retrieve_indices(mem, &query)?;
    let demos: Vec<_> = ids.iter().map(|&i| &mem.demos()[i]).collect();
    let retrieved_tasks: Vec<usize> = demos.iter().map(|d| d.eval_task_id).collect();
    let hits = retrieved_tasks.iter().filter(|&&t| t == task.eval_task_id).count();

    let mut segments = Vec::with_capacity(demos.len());
    let mut weights = Vec::with_capacity(demos.len());
    for d in &demos {
        let segs = demo_segments(&d.vision_embeds, &failed, cfg)?;
        weights.push(match variant {
            Adaptation::Weighted => build_weights(d.len(), &segs, &cfg.weights)?,
            _ => WeightVector::uniform(d.len()),
        });
        segments.push(segs);
    }
    let weight_stats = weights.iter().map(WeightVector::stats).collect();

    let tested = match variant {
        Adaptation::None => None,
        _ => {
            let set = AdaptationBatchSet::new(demos, weights)?;
            let mut rng = seed::rng(seed, &[tag::ADAPT, task.eval_task_id as u64]);
            Some(local_adapt(params, &set, &cfg.adapt, &mut rng)?)
        }
    };
    let final_successes = test_outcomes(tested.as_ref().unwrap_or(params), task, cfg.test_episodes, encoders, seed)?;

    Ok(TaskReport {
        task_index,
        variant,
        quiz_rate,
        n_failed: failed.len(),
        retrieval_accuracy: hits as f64 / ids.len() as f64,
        retrieved_ids: ids,
        retrieved_tasks,
        segments,
        weight_stats,
        final_rate: rate(&final_successes),
        final_successes,
        wall_time: cfg.record_wall_time.then(|| start.elapsed().as_secs_f64()),
    })
}
