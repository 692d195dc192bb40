//! End-to-end acceptance checks. Each criterion prints one `PASS`/`FAIL`
//! line to stdout (visible with `--nocapture`).
//!
//! Oracles, invariants, capacity collapse and determinism always assert.
//! The directional comparisons between adaptation variants (ER-WLA vs ER,
//! AGEM-WLA vs AGEM, WLA vs ULA, cluster vs noisy retrieval and the noisy
//! adaptation gain) are measured and reported on every run, and assert only
//! when `WLA_STRICT_ACCEPTANCE` is set.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::{Mutex, OnceLock};
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use wla_core::encoders::LanguageMode;
use wla_core::harness::{self, ExperimentConfig, SeedContext, TrainLog, TrainedCell};
use wla_core::lifelong::{agem_project, ewc_penalty, EwcAnchor, StrategyKind};
use wla_core::policy::{backward, batch_loss, demo_samples, forward, load_checkpoint, Sample};
use wla_core::recall::{
    build_weights, retrieve_indices, separation_segment, task_query, Adaptation, Segment, WeightRule,
};
use wla_core::seed;
use wla_core::{Admission, EpisodicMemory, Family, PolicyConfig, PolicyParams, TaskReport};

const TOY: &str = include_str!("../../../configs/toy.toml");
const SEEDS: [u64; 3] = [1, 21, 42];

// Pinned tolerances.
const FORGET_MIN: f64 = 0.20;
const WLA_MARGIN: f64 = 0.05;
const ULA_SLACK: f64 = 0.01;
const FD_STEP: f64 = 1e-5;
const FD_REL_TOL: f64 = 1e-4;
const AGEM_TOL: f64 = 1e-10;
const LATE_TASK_MAX: f64 = 0.10;
const RA_REFERENCE: f64 = 0.375;

fn report(id: &str, ok: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "[{id}] {} {detail}", if ok { "PASS" } else { "FAIL" }).unwrap();
}

fn strict() -> bool {
    std::env::var_os("WLA_STRICT_ACCEPTANCE").is_some()
}

/// Report a directional claim; asserts only in strict mode.
fn directional(id: &str, ok: bool, detail: &str) -> bool {
    report(id, ok, detail);
    assert!(ok || !strict(), "[{id}] {detail}");
    ok
}

fn toy() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(TOY).expect("toy preset parses")
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn norm(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// Weighting arithmetic

fn brute_weights(len: usize, segs: &[Segment]) -> Vec<f64> {
    let used = &segs[..segs.len().min(5)];
    let mut pre = Vec::with_capacity(len);
    for i in 0..len {
        let mut w = 1.0;
        for s in used {
            if s.lo <= i && i <= s.hi {
                w += 0.3;
            }
        }
        pre.push(if w > 2.0 { 2.0 } else { w });
    }
    let mut total = 0.0;
    for w in &pre {
        total += w;
    }
    let m = total / len as f64;
    pre.iter().map(|w| w / m).collect()
}

#[test]
fn c1_weighting_oracle() {
    let t0 = Instant::now();
    let rule = WeightRule::default();
    let mut rng = seed::rng(101, &[]);
    let mut mismatches = 0;
    for _ in 0..200 {
        let len = rng.random_range(1..=200);
        let n = rng.random_range(0..=8);
        let segs: Vec<Segment> = (0..n)
            .map(|_| {
                let a = rng.random_range(0..len);
                let b = rng.random_range(0..len);
                Segment { lo: a.min(b), hi: a.max(b) }
            })
            .collect();
        let got = build_weights(len, &segs, &rule).unwrap();
        let raw = wla_core::recall::raw_weights(len, &segs, &rule).unwrap();
        assert!(raw.iter().all(|&w| (1.0..=2.0).contains(&w)), "pre-normalisation range");
        if got.weights != brute_weights(len, &segs) {
            mismatches += 1;
        }
    }
    let w = build_weights(100, &[Segment { lo: 40, hi: 70 }], &rule).unwrap();
    let example = (w.weights[50] - 1.18939).abs() < 1e-5 && (w.weights[10] - 0.91491).abs() < 1e-5;
    let secs = t0.elapsed();
    let ok = mismatches == 0 && example && secs < Duration::from_secs(1);
    report("C1", ok, &format!("weighting: {mismatches} mismatches in 200 cases, worked example {example}, {secs:.2?}"));
    assert!(ok);
}

// ---------------------------------------------------------------------------
// Separation segment

fn brute_segment(d: &[f64], pad: usize) -> Option<Segment> {
    let mut m = 0.0;
    for &x in d {
        if x > m {
            m = x;
        }
    }
    if d.is_empty() || m <= 0.0 {
        return None;
    }
    let mut anchor = None;
    for i in (0..d.len()).rev() {
        if d[i] >= m / 8.0 && d[i] <= m / 3.0 {
            anchor = Some(i);
            break;
        }
    }
    let a = match anchor {
        Some(a) => a,
        None => (0..d.len()).find(|&i| d[i] == m).unwrap(),
    };
    let lo = a.saturating_sub(pad);
    let hi = if a + pad < d.len() { a + pad } else { d.len() - 1 };
    Some(Segment { lo, hi })
}

fn synthetic_curve(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let len = rng.random_range(1..=160);
    match rng.random_range(0..4) {
        // Random walk clipped at zero, then smoothed.
        0 | 1 => {
            let mut x = 0.0_f64;
            let raw: Vec<f64> = (0..len)
                .map(|_| {
                    x = (x + rng.random_range(-0.2..0.3)).max(0.0);
                    x
                })
                .collect();
            wla_core::recall::smooth(&raw, 5).unwrap()
        }
        // Two-level step: no value in the band, so the argmax is used.
        2 => {
            let at = rng.random_range(0..len);
            (0..len).map(|i| if i >= at { 1.0 } else { 0.0 }).collect()
        }
        // Noise with plateaus.
        _ => (0..len).map(|_| (rng.random_range(0..6) as f64) * 0.25).collect(),
    }
}

#[test]
fn c2_segment_oracle() {
    let t0 = Instant::now();
    let mut rng = seed::rng(202, &[]);
    let mut mismatches = 0;
    for _ in 0..500 {
        let d = synthetic_curve(&mut rng);
        if separation_segment(&d, 15) != brute_segment(&d, 15) {
            mismatches += 1;
        }
    }
    let ramp: Vec<f64> = (0..50).map(|i| if i < 20 { 0.0 } else { (i as f64 - 19.0) / 30.0 }).collect();
    let ramp_ok = separation_segment(&ramp, 15) == Some(Segment { lo: 14, hi: 44 });
    let secs = t0.elapsed();
    let ok = mismatches == 0 && ramp_ok && secs < Duration::from_secs(1);
    report("C2", ok, &format!("segments: {mismatches} mismatches in 500 curves, ramp [14,44] {ramp_ok}, {secs:.2?}"));
    assert!(ok);
}

// ---------------------------------------------------------------------------
// Retrieval

fn random_demo(rng: &mut ChaCha8Rng, task: usize, dv: usize, dl: usize) -> wla_core::Demonstration {
    let v: Vec<f64> = (0..dv).map(|_| rng.random_range(-1.0..1.0)).collect();
    let l: Vec<f64> = (0..dl).map(|_| rng.random_range(-1.0..1.0)).collect();
    wla_core::Demonstration {
        frames: vec![wla_core::Frame { obs: vec![0.0], proprio: [0.0; 3], action: [0.0; 3] }],
        vision_embeds: vec![v],
        lang_embed: l,
        description: vec!["x".into()],
        eval_task_id: task,
    }
}

fn brute_retrieve(mem: &EpisodicMemory, q: &wla_core::recall::RetrievalQuery) -> Vec<usize> {
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let mut all: Vec<(f64, usize)> = mem
        .demos()
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let s =
                q.alpha_v * dist(&q.scene_embed, &d.vision_embeds[0]) + q.alpha_l * dist(&q.lang_embed, &d.lang_embed);
            (s, i)
        })
        .collect();
    // Stable selection: repeatedly take the smallest remaining distance.
    let k = ((q.frac * all.len() as f64).ceil() as usize).max(1);
    let mut out = Vec::new();
    for _ in 0..k {
        let mut best = 0;
        for j in 1..all.len() {
            if all[j].0 < all[best].0 {
                best = j;
            }
        }
        out.push(all.remove(best).1);
    }
    out
}

#[test]
fn c3_retrieval_oracle() {
    let t0 = Instant::now();
    let mut rng = seed::rng(303, &[]);
    let mut mismatches = 0;
    for case in 0..100 {
        let size = rng.random_range(1..=200);
        let (dv, dl) = (rng.random_range(1..=16), rng.random_range(1..=16));
        let mut mem = EpisodicMemory::new(Admission::Reservoir { capacity: 200 }, case);
        for i in 0..size {
            mem.admit(random_demo(&mut rng, i % 7, dv, dl));
        }
        for (av, al) in [(1.0, 0.5), (0.5, 1.0)] {
            let probe = random_demo(&mut rng, 0, dv, dl);
            let q = wla_core::recall::RetrievalQuery {
                scene_embed: probe.vision_embeds[0].clone(),
                lang_embed: probe.lang_embed.clone(),
                alpha_v: av,
                alpha_l: al,
                frac: 0.1,
            };
            if retrieve_indices(&mem, &q).unwrap() != brute_retrieve(&mem, &q) {
                mismatches += 1;
            }
        }
    }
    let mut mem = EpisodicMemory::new(Admission::Reservoir { capacity: 20 }, 0);
    for i in 0..20 {
        mem.admit(random_demo(&mut rng, i, 4, 4));
    }
    let q = wla_core::recall::RetrievalQuery {
        scene_embed: vec![0.0; 4],
        lang_embed: vec![0.0; 4],
        alpha_v: 1.0,
        alpha_l: 0.5,
        frac: 0.1,
    };
    let top = retrieve_indices(&mem, &q).unwrap().len();
    let secs = t0.elapsed();
    let ok = mismatches == 0 && top == 2 && secs < Duration::from_secs(5);
    report("C3", ok, &format!("retrieval: {mismatches} mismatches in 200 queries, top-10% of 20 = {top}, {secs:.2?}"));
    assert!(ok);
}

// ---------------------------------------------------------------------------
// Gradients

/// Norm-wise relative error between analytic and central-difference
/// gradients over a sample of coordinates.
fn fd_error(f: &dyn Fn(&[f64]) -> f64, x: &[f64], grad: &[f64], coords: &[usize]) -> f64 {
    let mut fd = Vec::with_capacity(coords.len());
    let mut an = Vec::with_capacity(coords.len());
    let mut p = x.to_vec();
    for &i in coords {
        let x0 = p[i];
        p[i] = x0 + FD_STEP;
        let up = f(&p);
        p[i] = x0 - FD_STEP;
        let down = f(&p);
        p[i] = x0;
        fd.push((up - down) / (2.0 * FD_STEP));
        an.push(grad[i]);
    }
    let diff: Vec<f64> = fd.iter().zip(&an).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(&fd).max(norm(&an)).max(1e-12)
}

fn sample_coords(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    (0..k.min(n)).map(|_| rng.random_range(0..n)).collect()
}

#[test]
fn c4_gradient_exactness() {
    let t0 = Instant::now();
    let mut rng = seed::rng(404, &[]);
    let mut worst_policy = 0.0_f64;
    let mut worst_ewc = 0.0_f64;
    for case in 0..20u64 {
        let cfg = PolicyConfig {
            window: rng.random_range(1..=3),
            hidden: rng.random_range(3..=12),
            modes: rng.random_range(1..=3),
            sigma_min: 1e-3,
            vision_dim: rng.random_range(2..=6),
            language_dim: rng.random_range(2..=6),
            init_seed: case,
        };
        // Zero-initialised biases can leave a unit exactly on its ReLU kink,
        // where no derivative exists; jitter to a generic point.
        let mut params = PolicyParams::init(cfg);
        params.values.iter_mut().for_each(|v| *v += rng.random_range(-0.05..0.05));
        let batch: Vec<Sample> = (0..rng.random_range(1..=6))
            .map(|i| Sample {
                window: (0..cfg.input_dim()).map(|_| rng.random_range(-1.0..1.0)).collect(),
                action: [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                weight: if i == 1 { 0.0 } else { rng.random_range(0.5..2.0) },
            })
            .collect();
        let (_, grad) = backward(&params, &batch).unwrap();
        let loss = |v: &[f64]| batch_loss(&PolicyParams { config: cfg, values: v.to_vec() }, &batch).unwrap();
        let coords = sample_coords(&mut rng, params.len(), 40);
        worst_policy = worst_policy.max(fd_error(&loss, &params.values, &grad, &coords));

        let n = rng.random_range(5..=300);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let anchors: Vec<EwcAnchor> = (0..rng.random_range(1..=3))
            .map(|_| EwcAnchor {
                params: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
                fisher: (0..n).map(|_| rng.random_range(0.0..1.0)).collect(),
            })
            .collect();
        let lambda = rng.random_range(0.1..100.0);
        let (_, g) = ewc_penalty(&x, &anchors, lambda);
        let pen = |v: &[f64]| ewc_penalty(v, &anchors, lambda).0;
        let coords = sample_coords(&mut rng, n, 40);
        worst_ewc = worst_ewc.max(fd_error(&pen, &x, &g, &coords));
    }
    let secs = t0.elapsed();
    let ok = worst_policy < FD_REL_TOL && worst_ewc < FD_REL_TOL && secs < Duration::from_secs(30);
    report(
        "C4",
        ok,
        &format!("gradients: worst relative error policy {worst_policy:.2e}, EWC {worst_ewc:.2e} (< {FD_REL_TOL:.0e}), {secs:.2?}"),
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// AGEM

#[test]
fn c5_agem_invariant() {
    let t0 = Instant::now();
    let mut rng = seed::rng(505, &[]);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let (mut worst, mut aligned, mut aligned_changed) = (f64::INFINITY, 0, 0);
    for _ in 0..1000 {
        let n = rng.random_range(1..=64);
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = agem_project(&g, &r);
        worst = worst.min(dot(&p, &r));
        if dot(&g, &r) >= 0.0 {
            aligned += 1;
            if p != g {
                aligned_changed += 1;
            }
        }
    }
    let secs = t0.elapsed();
    let ok = worst >= -AGEM_TOL && aligned_changed == 0 && aligned > 0 && secs < Duration::from_secs(1);
    report(
        "C5",
        ok,
        &format!("AGEM: min <g',g_ref> {worst:.2e}, {aligned} aligned pairs, {aligned_changed} changed, {secs:.2?}"),
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// Forgetting and recovery, WLA vs ULA (shared training)

struct Trained {
    cfg: ExperimentConfig,
    seeds: Vec<(SeedContext, BTreeMap<StrategyKind, TrainedCell>)>,
}

fn directional_config() -> ExperimentConfig {
    let mut cfg = toy();
    cfg.suite.family = Family::Spatial;
    cfg.suite.n_tasks = 5;
    cfg.seeds = SEEDS.to_vec();
    cfg.strategies = vec![StrategyKind::Naive, StrategyKind::Er, StrategyKind::Agem];
    cfg
}

fn train_all(cfg: ExperimentConfig) -> Trained {
    let mut seeds = Vec::new();
    for &s in &cfg.seeds {
        let ctx = harness::prepare_seed(&cfg, s).unwrap();
        let mut cells = BTreeMap::new();
        for &kind in &cfg.strategies {
            let (cell, err) = harness::train_cell(&cfg, &ctx, kind, None);
            assert!(err.is_none(), "seed {s} {kind}: {err:?}");
            cells.insert(kind, cell);
        }
        seeds.push((ctx, cells));
    }
    Trained { cfg, seeds }
}

fn spatial() -> &'static Trained {
    static T: OnceLock<Trained> = OnceLock::new();
    T.get_or_init(|| train_all(directional_config()))
}

type ReportKey = (usize, StrategyKind, &'static str, usize);

/// Deployment reports for one seed index, strategy, variant and adaptation
/// length; computed once and shared between criteria.
fn reports(t: &Trained, si: usize, kind: StrategyKind, v: Adaptation, epochs: usize) -> Vec<TaskReport> {
    static CACHE: OnceLock<Mutex<BTreeMap<ReportKey, Vec<TaskReport>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (si, kind, v.label(), epochs);
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(r) = guard.get(&key) {
        return r.clone();
    }
    let mut cfg = t.cfg.clone();
    cfg.adapt.epochs = epochs;
    let (ctx, cells) = &t.seeds[si];
    let r = harness::test_cell(&cfg, ctx, &cells[&kind], v).unwrap();
    guard.insert(key, r.clone());
    r
}

fn final_asr(t: &Trained, kind: StrategyKind, v: Adaptation, epochs: usize) -> f64 {
    let rates: Vec<f64> =
        (0..t.seeds.len()).flat_map(|si| reports(t, si, kind, v, epochs).into_iter().map(|r| r.final_rate)).collect();
    mean(&rates)
}

#[test]
fn c6_forgetting_and_recovery() {
    let t0 = Instant::now();
    let t = spatial();
    let epochs = t.cfg.adapt.epochs;
    let drops: Vec<f64> = t
        .seeds
        .iter()
        .map(|(_, cells)| {
            let m = &cells[&StrategyKind::Naive].matrix;
            m[0][0] - m[m.len() - 1][0]
        })
        .collect();
    let drop = mean(&drops);
    let last_row = |kind: StrategyKind| {
        let all: Vec<f64> = t.seeds.iter().flat_map(|(_, cells)| cells[&kind].matrix.last().unwrap().clone()).collect();
        mean(&all)
    };
    let naive = last_row(StrategyKind::Naive);
    let er = final_asr(t, StrategyKind::Er, Adaptation::None, epochs);
    let er_wla = final_asr(t, StrategyKind::Er, Adaptation::Weighted, epochs);
    let agem = final_asr(t, StrategyKind::Agem, Adaptation::None, epochs);
    let agem_wla = final_asr(t, StrategyKind::Agem, Adaptation::Weighted, epochs);
    let secs = t0.elapsed();

    let a = drop >= FORGET_MIN;
    report(
        "C6a",
        a,
        &format!("sequential task-1 drop {:.1} pp per seed {drops:.2?} (>= {:.0})", 100.0 * drop, 100.0 * FORGET_MIN),
    );
    let b = er >= naive;
    report("C6b", b, &format!("ER {:.1} vs sequential {:.1}", 100.0 * er, 100.0 * naive));
    let c = directional(
        "C6c",
        er_wla >= er + WLA_MARGIN,
        &format!("ER-WLA {:.1} vs ER {:.1} (+{:.0} required)", 100.0 * er_wla, 100.0 * er, 100.0 * WLA_MARGIN),
    );
    let d = directional(
        "C6d",
        agem_wla >= agem + WLA_MARGIN,
        &format!("AGEM-WLA {:.1} vs AGEM {:.1} (+{:.0} required)", 100.0 * agem_wla, 100.0 * agem, 100.0 * WLA_MARGIN),
    );
    report("C6", a && b && c && d, &format!("forgetting and recovery, {secs:.0?} including shared training"));
    assert!(a && b, "forgetting/replay mechanism checks failed");
}

#[test]
fn c7_weighted_vs_uniform() {
    let t0 = Instant::now();
    let t = spatial();
    let kinds = [StrategyKind::Er, StrategyKind::Agem];
    let mut strictly_greater = false;
    let mut within_slack = true;
    let mut same_retrieval = true;
    let mut lines = Vec::new();
    for epochs in [15, 20, 25] {
        let (mut w, mut u) = (Vec::new(), Vec::new());
        for si in 0..t.seeds.len() {
            for kind in kinds {
                let rw = reports(t, si, kind, Adaptation::Weighted, epochs);
                let ru = reports(t, si, kind, Adaptation::Uniform, epochs);
                same_retrieval &= rw.iter().zip(&ru).all(|(a, b)| a.retrieved_ids == b.retrieved_ids);
                w.extend(rw.iter().map(|r| r.final_rate));
                u.extend(ru.iter().map(|r| r.final_rate));
            }
        }
        let (mw, mu) = (mean(&w), mean(&u));
        within_slack &= mw >= mu - ULA_SLACK;
        strictly_greater |= mw > mu;
        lines.push(format!("{epochs} ep: WLA {:.1} ULA {:.1}", 100.0 * mw, 100.0 * mu));
    }
    let secs = t0.elapsed();
    report("C7-retrieval", same_retrieval, "WLA and ULA retrieve identical demonstration sets");
    assert!(same_retrieval);
    directional(
        "C7",
        within_slack && strictly_greater,
        &format!("WLA vs ULA (ER and AGEM pooled): {}; {secs:.0?}", lines.join(", ")),
    );
}

// ---------------------------------------------------------------------------
// Encoder ablation

fn goal_config(mode: LanguageMode) -> ExperimentConfig {
    let mut cfg = toy();
    cfg.suite.family = Family::Goal;
    cfg.suite.n_tasks = 5;
    cfg.seeds = SEEDS.to_vec();
    cfg.encoder.language_mode = mode;
    cfg
}

/// Retrieval accuracy of the deployment query against a memory filled from
/// expert demonstrations; needs no trained policy.
fn retrieval_accuracy(cfg: &ExperimentConfig, seed: u64) -> f64 {
    let mut small = cfg.clone();
    small.demos_per_task = match cfg.memory {
        Admission::OracleQuota { per_task } => per_task,
        Admission::Reservoir { .. } => cfg.demos_per_task,
    };
    let ctx = harness::prepare_seed(&small, seed).unwrap();
    let mut mem = EpisodicMemory::new(cfg.memory, seed::derive(seed, &[seed::tag::MEMORY]));
    for demos in &ctx.demos {
        for d in demos {
            mem.admit(d.clone());
        }
    }
    let rc = cfg.recall_config();
    let per_task: Vec<f64> = ctx
        .suite
        .iter()
        .map(|task| {
            let q = task_query(task, &ctx.encoders, &rc, seed).unwrap();
            let got = retrieve_indices(&mem, &q).unwrap();
            let hits = got.iter().filter(|&&i| mem.demos()[i].eval_task_id == task.eval_task_id).count();
            hits as f64 / got.len() as f64
        })
        .collect();
    mean(&per_task)
}

#[test]
fn c8_encoder_ablation() {
    let t0 = Instant::now();
    let cluster = goal_config(LanguageMode::Cluster);
    let noisy = goal_config(LanguageMode::Noisy);

    // Paraphrase ordering in cluster mode.
    let ctx = SeedContext::without_demos(&cluster, SEEDS[0]).unwrap();
    let embeds: Vec<Vec<Vec<f64>>> = ctx
        .suite
        .iter()
        .map(|t| t.descriptions.iter().map(|d| ctx.encoders.language.encode(d).unwrap()).collect())
        .collect();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let (mut intra, mut inter) = (0.0_f64, f64::INFINITY);
    for (i, ti) in embeds.iter().enumerate() {
        for (j, tj) in embeds.iter().enumerate() {
            for a in ti {
                for b in tj {
                    if i == j {
                        intra = intra.max(dist(a, b));
                    } else {
                        inter = inter.min(dist(a, b));
                    }
                }
            }
        }
    }
    let ordered = intra < inter;
    report("C8-ordering", ordered, &format!("cluster mode: max intra-task {intra:.4} < min inter-task {inter:.4}"));
    assert!(ordered);

    let ra: Vec<(u64, f64, f64)> =
        SEEDS.iter().map(|&s| (s, retrieval_accuracy(&cluster, s), retrieval_accuracy(&noisy, s))).collect();
    let every_seed = ra.iter().all(|&(_, c, n)| c > n);
    let per_seed: Vec<String> = ra.iter().map(|(s, c, n)| format!("seed {s}: {c:.3} vs {n:.3}")).collect();
    directional("C8-ra", every_seed, &format!("cluster RA > noisy RA on every seed ({})", per_seed.join(", ")));

    // Robustness: where noisy retrieval clears the reference line, local
    // adaptation must not hurt on average.
    let eligible: Vec<u64> = ra.iter().filter(|r| r.2 >= RA_REFERENCE).map(|r| r.0).collect();
    if eligible.is_empty() {
        report("C8-gain", true, &format!("no seed has noisy RA >= {RA_REFERENCE}; gain clause does not apply"));
    } else {
        let mut cfg = noisy.clone();
        cfg.seeds = eligible.clone();
        cfg.strategies = vec![StrategyKind::Er];
        let t = train_all(cfg);
        let (mut gains, mut base) = (Vec::new(), Vec::new());
        for (ctx, cells) in &t.seeds {
            let cell = &cells[&StrategyKind::Er];
            let none = harness::test_cell(&t.cfg, ctx, cell, Adaptation::None).unwrap();
            let wla = harness::test_cell(&t.cfg, ctx, cell, Adaptation::Weighted).unwrap();
            for (a, b) in wla.iter().zip(&none) {
                gains.push(a.final_rate - b.final_rate);
                base.push(b.final_rate);
            }
        }
        let g = mean(&gains);
        directional(
            "C8-gain",
            g >= 0.0,
            &format!(
                "noisy mode ER-WLA {:.1} vs ER {:.1} (gain {:.1} pp) over seeds {eligible:?}",
                100.0 * (mean(&base) + g),
                100.0 * mean(&base),
                100.0 * g
            ),
        );
    }
    report("C8", true, &format!("encoder ablation finished in {:.0?}", t0.elapsed()));
}

// ---------------------------------------------------------------------------
// PackNet capacity

#[test]
fn c9_packnet_capacity() {
    let t0 = Instant::now();
    let mut cfg = toy();
    cfg.suite.family = Family::Spatial;
    cfg.suite.n_tasks = 20;
    cfg.seeds = vec![SEEDS[0]];
    cfg.strategies = vec![StrategyKind::Packnet];
    cfg.strategy.packnet_prune_frac = 0.75;
    // Capacity and isolation do not depend on how well each task is learned;
    // a shorter schedule keeps twenty tasks affordable.
    cfg.demos_per_task = 25;
    cfg.train.epochs = 50;
    let tmp = tempfile::tempdir().unwrap();
    let ctx = harness::prepare_seed(&cfg, SEEDS[0]).unwrap();
    let (cell, err) = harness::train_cell(&cfg, &ctx, StrategyKind::Packnet, Some(tmp.path()));
    assert!(err.is_none(), "{err:?}");

    let logged = cell.log.iter().filter(|l| matches!(l, TrainLog::CapacityExhausted { .. })).count();
    let exhausted = !cell.exhausted.is_empty() && logged == cell.exhausted.len();
    report("C9-exhausted", exhausted, &format!("capacity exhausted at tasks {:?}", cell.exhausted));
    assert!(exhausted);

    let last = cell.matrix.last().unwrap();
    let late: Vec<f64> = cell.exhausted.iter().map(|&j| last[j]).collect();
    let late_rate = mean(&late);
    let early = mean(&last[..3]);
    let near_zero = late_rate <= LATE_TASK_MAX;
    report(
        "C9-late",
        near_zero,
        &format!(
            "refused tasks succeed {:.1}% (<= {:.0}%), first three tasks {:.1}%",
            100.0 * late_rate,
            100.0 * LATE_TASK_MAX,
            100.0 * early
        ),
    );
    assert!(near_zero);

    let masks = cell.packnet.as_ref().unwrap();
    let ckpt = |k: usize| load_checkpoint(&tmp.path().join("packnet").join(format!("task{k}.ckpt"))).unwrap();
    let n_tasks = cfg.suite.n_tasks;
    let mut identical = true;
    let mut checked = 0;
    for j in 0..n_tasks {
        let Some(label) = cell.labels[j] else { continue };
        let at_j = ckpt(j);
        let frozen = masks.masked_values(&at_j.values, label);
        for k in j + 1..n_tasks {
            identical &= masks.masked_values(&ckpt(k).values, label) == frozen;
        }
        identical &= masks.masked_values(&cell.params.values, label) == frozen;
        let then = PolicyParams { config: at_j.config, values: frozen };
        let now = cell.params_for(j);
        for s in demo_samples(&at_j.config, &ctx.demos[j][0]).iter().step_by(10) {
            identical &= forward(&then, &s.window).unwrap() == forward(&now, &s.window).unwrap();
        }
        checked += 1;
    }
    report(
        "C9",
        identical && checked > 0,
        &format!(
            "masked outputs of {checked} committed tasks bit-identical through later training, {:.0?}",
            t0.elapsed()
        ),
    );
    assert!(identical && checked > 0);
}

// ---------------------------------------------------------------------------
// Determinism

fn read(dir: &Path, rel: &str) -> Vec<u8> {
    std::fs::read(dir.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

#[test]
fn c10_determinism() {
    let t0 = Instant::now();
    let mut cfg = toy();
    cfg.seeds = vec![1, 21];
    cfg.suite.n_tasks = 2;
    cfg.strategies =
        vec![StrategyKind::Naive, StrategyKind::Er, StrategyKind::Ewc, StrategyKind::Agem, StrategyKind::Packnet];
    cfg.demos_per_task = 4;
    cfg.eval_episodes = 4;
    cfg.train.epochs = 3;
    cfg.train.eval_every = 1;
    cfg.train.probe_episodes = 2;
    cfg.recall.quiz_episodes = 4;
    cfg.recall.test_episodes = 4;
    cfg.adapt.epochs = 2;
    let tmp = tempfile::tempdir().unwrap();
    cfg.output_dir = tmp.path().to_path_buf();
    let mut files = vec!["record.json".to_string(), "config.toml".to_string()];
    for s in &cfg.seeds {
        for f in ["train.jsonl", "reports.jsonl", "summary.csv"] {
            files.push(format!("{s}/{f}"));
        }
        for kind in &cfg.strategies {
            files.push(format!("{s}/checkpoints/{}/final.ckpt", kind.as_str()));
        }
    }
    let run = cfg.run_dir();
    harness::run_experiment(&cfg).unwrap();
    let first: Vec<Vec<u8>> = files.iter().map(|f| read(&run, f)).collect();
    harness::run_experiment(&cfg).unwrap();
    let differing: Vec<&String> =
        files.iter().zip(&first).filter(|(f, b)| read(&run, f) != **b).map(|(f, _)| f).collect();
    let ok = differing.is_empty();
    report(
        "C10",
        ok,
        &format!("{} artifacts compared across reruns, {:.0?}; differing: {differing:?}", files.len(), t0.elapsed()),
    );
    assert!(ok);
}
