use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{agem_project, estimate_fisher, ewc_penalty, EwcAnchor, PacknetMasks};
use super::{StrategyConfig, StrategyKind, TrainConfig};
use crate::memory::EpisodicMemory;
use crate::policy::{adamw_step_masked, backward, clip_grad_norm, demo_samples, OptimizerState, PolicyParams, Sample};
use crate::taskworld::Demonstration;
use crate::{Error, Result};

/// Scores the current policy on the current task (harness-supplied).
pub type Probe<'a> = dyn FnMut(&PolicyParams) -> Result<f64> + 'a;

/// State a strategy carries across task boundaries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StrategyState {
    pub anchors: Vec<EwcAnchor>,
    pub packnet: Option<PacknetMasks>,
    pub tasks_seen: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainEvent {
    pub task_index: usize,
    pub epoch: usize,
    pub loss: f64,
    pub probe_score: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: PolicyParams,
    pub events: Vec<TrainEvent>,
    pub best_epoch: Option<usize>,
    pub best_score: Option<f64>,
    /// `(current, memory)` sample counts of every optimisation batch.
    pub batch_composition: Vec<(usize, usize)>,
    pub packnet_label: Option<u16>,
}

struct Stepper<'a> {
    strategy: &'a StrategyConfig,
    cfg: &'a TrainConfig,
    mask: Option<Vec<bool>>,
    opt: OptimizerState,
}

impl Stepper<'_> {
    fn step(
        &mut self,
        params: &mut PolicyParams,
        batch: &[Sample],
        reference: Option<&[Sample]>,
        anchors: &[EwcAnchor],
    ) -> Result<f64> {
        let (loss, mut grad) = backward(params, batch)?;
        let mut loss = loss;
        if self.strategy.kind == StrategyKind::Ewc && !anchors.is_empty() {
            let (pen, pg) = ewc_penalty(&params.values, anchors, self.strategy.ewc_lambda);
            loss += pen;
            grad.iter_mut().zip(pg).for_each(|(g, p)| *g += p);
        }
        if let Some(r) = reference {
            let (_, g_ref) = backward(params, r)?;
            grad = agem_project(&grad, &g_ref);
        }
        if let Some(mask) = &self.mask {
            grad.iter_mut().zip(mask).for_each(|(g, &m)| {
                if !m {
                    *g = 0.0
                }
            });
        }
        if self.cfg.loss_scale != 1.0 {
            grad.iter_mut().for_each(|g| *g *= self.cfg.loss_scale);
            loss *= self.cfg.loss_scale;
        }
        clip_grad_norm(&mut grad, self.cfg.grad_clip);
        adamw_step_masked(&mut params.values, &grad, &mut self.opt, &self.cfg.optimizer, self.mask.as_deref());
        Ok(loss)
    }
}

/// Train on one task's demonstrations.
///
/// Memory holds demonstrations of earlier tasks while the task trains; the
/// current demonstrations are offered to memory once training finishes.
/// When a probe is supplied, the current task is scored every
/// `cfg.eval_every` epochs and the best-scoring parameters are returned
/// (later probes win ties).
#[allow(clippy::too_many_arguments)]
pub fn train_task(
    params: &PolicyParams,
    demos: &[Demonstration],
    task_index: usize,
    mem: &mut EpisodicMemory,
    strategy: &StrategyConfig,
    state: &mut StrategyState,
    cfg: &TrainConfig,
    mut probe: Option<&mut Probe<'_>>,
    rng: &mut ChaCha8Rng,
) -> Result<TrainOutcome> {
    if demos.is_empty() {
        return Err(Error::Input("train_task needs at least one demonstration".into()));
    }
    state.tasks_seen += 1;
    let mut outcome = TrainOutcome {
        params: params.clone(),
        events: Vec::new(),
        best_epoch: None,
        best_score: None,
        batch_composition: Vec::new(),
        packnet_label: None,
    };
    if strategy.kind == StrategyKind::Packnet {
        let masks = state.packnet.get_or_insert_with(|| PacknetMasks::new(params.len()));
        masks.check_capacity(strategy.packnet_min_free_frac)?;
    }
    if cfg.epochs == 0 {
        admit_all(mem, demos);
        return Ok(outcome);
    }

    let samples: Vec<Sample> = demos.iter().flat_map(|d| demo_samples(&params.config, d)).collect();
    let mut stepper = Stepper {
        strategy,
        cfg,
        mask: state.packnet.as_ref().map(PacknetMasks::free_mask),
        opt: OptimizerState::new(params.len()),
    };
    let replay = matches!(strategy.kind, StrategyKind::Er) && !mem.is_empty();
    let n_mem = if replay { (strategy.er_mix * cfg.batch_size as f64).round() as usize } else { 0 };
    let n_cur = (cfg.batch_size - n_mem).max(1);
    let mut current = params.clone();
    let mut best: Option<(f64, usize, PolicyParams)> = None;
    let mut order: Vec<usize> = (0..samples.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(rng);
        let mut loss_sum = 0.0;
        let mut n_batches = 0usize;
        for chunk in order.chunks(n_cur) {
            let mut batch: Vec<Sample> = chunk.iter().map(|&i| samples[i].clone()).collect();
            if n_mem > 0 {
                batch.extend(mem.replay_batch(&params.config, n_mem, rng)?);
            }
            outcome.batch_composition.push((chunk.len(), batch.len() - chunk.len()));
            let reference = if strategy.kind == StrategyKind::Agem && !mem.is_empty() {
                Some(mem.replay_batch(&params.config, cfg.batch_size, rng)?)
            } else {
                None
            };
            loss_sum += stepper.step(&mut current, &batch, reference.as_deref(), &state.anchors)?;
            n_batches += 1;
        }
        let mut probe_score = None;
        if let Some(p) = probe.as_deref_mut() {
            if cfg.eval_every > 0 && epoch % cfg.eval_every == 0 {
                let score = p(&current)?;
                probe_score = Some(score);
                if best.as_ref().is_none_or(|(b, _, _)| score >= *b) {
                    best = Some((score, epoch, current.clone()));
                }
            }
        }
        outcome.events.push(TrainEvent { task_index, epoch, loss: loss_sum / n_batches as f64, probe_score });
    }
    if let Some((score, epoch, p)) = best {
        outcome.best_score = Some(score);
        outcome.best_epoch = Some(epoch);
        current = p;
    }

    match strategy.kind {
        StrategyKind::Ewc => {
            let fisher = estimate_fisher(&current, demos, strategy.ewc_fisher_batches, cfg.batch_size, rng)?;
            state.anchors.push(EwcAnchor { params: current.values.clone(), fisher });
        }
        StrategyKind::Packnet => {
            let masks = state.packnet.as_mut().expect("initialised above");
            let label = masks.commit(&mut current.values, strategy.packnet_prune_frac)?;
            outcome.packnet_label = Some(label);
            if strategy.packnet_posttrain_epochs > 0 {
                let mut post = Stepper {
                    strategy,
                    cfg,
                    mask: Some(masks.owned_by(label)),
                    opt: OptimizerState::new(params.len()),
                };
                for _ in 0..strategy.packnet_posttrain_epochs {
                    order.shuffle(rng);
                    for chunk in order.chunks(cfg.batch_size) {
                        let batch: Vec<Sample> = chunk.iter().map(|&i| samples[i].clone()).collect();
                        post.step(&mut current, &batch, None, &[])?;
                    }
                }
            }
        }
        _ => {}
    }
    admit_all(mem, demos);
    outcome.params = current;
    Ok(outcome)
}

fn admit_all(mem: &mut EpisodicMemory, demos: &[Demonstration]) {
    for d in demos {
        mem.admit(d.clone());
    }
}
