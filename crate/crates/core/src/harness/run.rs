use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::encoders::Encoders;
use crate::lifelong::{success_rate, train_task, EpisodeStream, PacknetMasks, StrategyKind, StrategyState, TrainEvent};
use crate::memory::{self, EpisodicMemory};
use crate::policy::{load_checkpoint, save_checkpoint, PolicyController, PolicyParams};
use crate::recall::{adapt_and_test, rate, test_outcomes, Adaptation, TaskReport};
use crate::seed::{self, tag};
use crate::taskworld::{expert_rollout, make_suite_with, Demonstration, TaskSpec};
use crate::{Error, Result};

/// Everything a replica seed shares across strategy cells.
pub struct SeedContext {
    pub seed: u64,
    pub suite: Vec<TaskSpec>,
    pub encoders: Encoders,
    pub demos: Vec<Vec<Demonstration>>,
}

pub fn build_suite(cfg: &ExperimentConfig) -> Result<Vec<TaskSpec>> {
    let s = &cfg.suite;
    make_suite_with(s.family, s.n_tasks, s.seed, s.paraphrases)
}

/// Expert demonstrations of every task; episode seeds derive from `seed`.
pub fn collect_demos(
    suite: &[TaskSpec],
    per_task: usize,
    encoders: &Encoders,
    seed: u64,
) -> Result<Vec<Vec<Demonstration>>> {
    suite
        .iter()
        .map(|t| {
            (0..per_task)
                .map(|i| expert_rollout(t, seed::derive(seed, &[tag::DEMO, t.eval_task_id as u64, i as u64]), encoders))
                .collect()
        })
        .collect()
}

pub fn prepare_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedContext> {
    let mut ctx = SeedContext::without_demos(cfg, seed)?;
    ctx.demos = collect_demos(&ctx.suite, cfg.demos_per_task, &ctx.encoders, seed)?;
    Ok(ctx)
}

impl SeedContext {
    /// Suite and encoders only; enough for testing a trained cell.
    pub fn without_demos(cfg: &ExperimentConfig, seed: u64) -> Result<Self> {
        let suite = build_suite(cfg)?;
        let encoders = Encoders::new(&cfg.encoder, suite[0].obs_len());
        Ok(Self { seed, suite, encoders, demos: Vec::new() })
    }
}

/// One line of `train.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainLog {
    Epoch {
        strategy: StrategyKind,
        #[serde(flatten)]
        event: TrainEvent,
    },
    /// Success of every episode on `task` after training `after_task`.
    Eval {
        strategy: StrategyKind,
        after_task: usize,
        task: usize,
        successes: Vec<bool>,
    },
    CapacityExhausted {
        strategy: StrategyKind,
        task_index: usize,
        free: usize,
        required: usize,
    },
    Failed {
        strategy: StrategyKind,
        task_index: usize,
        error: String,
    },
}

/// One line of `reports.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportLine {
    pub strategy: StrategyKind,
    #[serde(flatten)]
    pub report: TaskReport,
}

/// Result of lifelong training for one strategy.
#[derive(Debug, Clone)]
pub struct TrainedCell {
    pub strategy: StrategyKind,
    pub params: PolicyParams,
    pub memory: EpisodicMemory,
    pub packnet: Option<PacknetMasks>,
    /// PackNet label of each task, `None` when it was never committed.
    pub labels: Vec<Option<u16>>,
    /// `matrix[k][j]`: success rate on task `j` after training task `k`.
    pub matrix: Vec<Vec<f64>>,
    pub exhausted: Vec<usize>,
    pub log: Vec<TrainLog>,
}

impl TrainedCell {
    /// The parameters task `j` is evaluated with. PackNet uses the weights of
    /// tasks committed up to `j` (the oracle mask); others use everything.
    pub fn params_for(&self, j: usize) -> PolicyParams {
        match &self.packnet {
            Some(m) => {
                let label = self.labels.get(j).copied().flatten().unwrap_or(m.committed);
                PolicyParams { config: self.params.config, values: m.masked_values(&self.params.values, label) }
            }
            None => self.params.clone(),
        }
    }
}

fn strategy_tag(kind: StrategyKind) -> u64 {
    seed::fnv1a(kind.as_str().as_bytes())
}

/// Lifelong training of one strategy over the suite, with a success matrix
/// row after each task and a checkpoint per task when `ckpt_dir` is given.
pub fn train_cell(
    cfg: &ExperimentConfig,
    ctx: &SeedContext,
    kind: StrategyKind,
    ckpt_dir: Option<&Path>,
) -> (TrainedCell, Option<Error>) {
    let strategy = cfg.strategy_config(kind);
    let mut cell = TrainedCell {
        strategy: kind,
        params: PolicyParams::init(cfg.policy_config(ctx.seed)),
        memory: EpisodicMemory::new(cfg.memory, seed::derive(ctx.seed, &[tag::MEMORY])),
        packnet: None,
        labels: vec![None; ctx.suite.len()],
        matrix: Vec::new(),
        exhausted: Vec::new(),
        log: Vec::new(),
    };
    let mut state = StrategyState::default();
    let mut rng = seed::rng(ctx.seed, &[tag::TRAIN, strategy_tag(kind)]);
    for (k, task) in ctx.suite.iter().enumerate() {
        let mut probe = |p: &PolicyParams| -> Result<f64> {
            let mut c = PolicyController::new(p);
            success_rate(task, &mut c, &ctx.encoders, cfg.train.probe_episodes, ctx.seed, EpisodeStream::Probe)
        };
        let step = train_task(
            &cell.params,
            &ctx.demos[k],
            k,
            &mut cell.memory,
            &strategy,
            &mut state,
            &cfg.train,
            Some(&mut probe),
            &mut rng,
        );
        match step {
            Ok(out) => {
                cell.params = out.params;
                cell.labels[k] = out.packnet_label;
                cell.log.extend(out.events.into_iter().map(|event| TrainLog::Epoch { strategy: kind, event }));
            }
            Err(Error::CapacityExhausted { free, required }) => {
                cell.exhausted.push(k);
                cell.log.push(TrainLog::CapacityExhausted { strategy: kind, task_index: k, free, required });
            }
            Err(e) => {
                cell.log.push(TrainLog::Failed { strategy: kind, task_index: k, error: e.to_string() });
                cell.packnet = state.packnet;
                return (cell, Some(e));
            }
        }
        cell.packnet = state.packnet.clone();
        if let Err(e) = eval_row(cfg, ctx, &mut cell, k).and_then(|_| match ckpt_dir {
            Some(dir) => save_cell_checkpoint(dir, &cell, k),
            None => Ok(()),
        }) {
            cell.log.push(TrainLog::Failed { strategy: kind, task_index: k, error: e.to_string() });
            return (cell, Some(e));
        }
    }
    (cell, None)
}

fn eval_row(cfg: &ExperimentConfig, ctx: &SeedContext, cell: &mut TrainedCell, k: usize) -> Result<()> {
    let mut row = Vec::with_capacity(ctx.suite.len());
    for (j, task) in ctx.suite.iter().enumerate() {
        let s = test_outcomes(&cell.params_for(j), task, cfg.eval_episodes, &ctx.encoders, ctx.seed)?;
        row.push(rate(&s));
        cell.log.push(TrainLog::Eval { strategy: cell.strategy, after_task: k, task: j, successes: s });
    }
    cell.matrix.push(row);
    Ok(())
}

fn save_cell_checkpoint(dir: &Path, cell: &TrainedCell, k: usize) -> Result<()> {
    let dir = dir.join(cell.strategy.as_str());
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let hyper = serde_json::json!({ "strategy": cell.strategy, "after_task": k });
    save_checkpoint(&dir.join(format!("task{k}.ckpt")), &cell.params, hyper)
}

/// Persist what `adapt-test` needs to resume from a trained cell.
pub fn save_trained(dir: &Path, cell: &TrainedCell) -> Result<()> {
    let dir = dir.join(cell.strategy.as_str());
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    save_checkpoint(&dir.join("final.ckpt"), &cell.params, serde_json::json!({ "strategy": cell.strategy }))?;
    memory::save(&cell.memory, &dir.join("memory.json"))?;
    let side = PacknetSidecar { masks: cell.packnet.clone(), labels: cell.labels.clone() };
    let p = dir.join("packnet.json");
    std::fs::write(&p, serde_json::to_string(&side)? + "\n").map_err(|e| Error::io(&p, e))
}

#[derive(Serialize, Deserialize)]
struct PacknetSidecar {
    masks: Option<PacknetMasks>,
    labels: Vec<Option<u16>>,
}

/// Reload a cell written by [`save_trained`]. The success matrix and log are
/// not restored.
pub fn load_trained(dir: &Path, kind: StrategyKind) -> Result<TrainedCell> {
    let dir = dir.join(kind.as_str());
    let params = load_checkpoint(&dir.join("final.ckpt"))?;
    let memory = memory::load(&dir.join("memory.json"))?;
    let p = dir.join("packnet.json");
    let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    let side: PacknetSidecar = serde_json::from_str(&text).map_err(|e| Error::format(&p, e.to_string()))?;
    Ok(TrainedCell {
        strategy: kind,
        params,
        memory,
        packnet: side.masks,
        labels: side.labels,
        matrix: Vec::new(),
        exhausted: Vec::new(),
        log: Vec::new(),
    })
}

/// Variants a strategy is tested under. PackNet relies on oracle masks and
/// is only reported without adaptation.
pub fn cell_variants(cfg: &ExperimentConfig, kind: StrategyKind) -> Vec<Adaptation> {
    if kind == StrategyKind::Packnet {
        return vec![Adaptation::None];
    }
    cfg.variants.clone()
}

/// Deployment pipeline on every task of the suite.
pub fn test_cell(
    cfg: &ExperimentConfig,
    ctx: &SeedContext,
    cell: &TrainedCell,
    variant: Adaptation,
) -> Result<Vec<TaskReport>> {
    let rc = cfg.recall_config();
    ctx.suite
        .iter()
        .enumerate()
        .map(|(j, task)| {
            adapt_and_test(&cell.params_for(j), &cell.memory, task, j, &ctx.encoders, &rc, variant, ctx.seed)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub strategy: StrategyKind,
    #[serde(flatten)]
    pub status: CellStatus,
    pub matrix: Vec<Vec<f64>>,
    pub exhausted: Vec<usize>,
    pub reports: Vec<TaskReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub cells: Vec<CellRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub seed: u64,
    pub strategy: StrategyKind,
    pub train_secs: f64,
    pub test_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedRecord>,
    /// Kept out of `record.json` so reruns stay byte-identical.
    #[serde(skip)]
    pub timings: Vec<Timing>,
}

impl RunRecord {
    pub fn failed_cells(&self) -> Vec<(u64, StrategyKind, String)> {
        self.seeds
            .iter()
            .flat_map(|s| {
                s.cells.iter().filter_map(move |c| match &c.status {
                    CellStatus::Failed { error } => Some((s.seed, c.strategy, error.clone())),
                    CellStatus::Ok => None,
                })
            })
            .collect()
    }

    pub fn cells(&self, kind: StrategyKind) -> impl Iterator<Item = (u64, &CellRecord)> {
        self.seeds
            .iter()
            .flat_map(move |s| s.cells.iter().filter(move |c| c.strategy == kind).map(move |c| (s.seed, c)))
    }

    pub fn variants_of(&self, kind: StrategyKind) -> Vec<Adaptation> {
        let mut out = Vec::new();
        for (_, c) in self.cells(kind) {
            for r in &c.reports {
                if !out.contains(&r.variant) {
                    out.push(r.variant);
                }
            }
        }
        out
    }

    pub fn reports(&self, kind: StrategyKind, variant: Adaptation) -> impl Iterator<Item = &TaskReport> {
        self.cells(kind).flat_map(|(_, c)| c.reports.iter()).filter(move |r| r.variant == variant)
    }

    pub fn load(run_dir: &Path) -> Result<Self> {
        let p = run_dir.join("record.json");
        let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(&p, e.to_string()))
    }
}

pub(crate) struct Jsonl {
    path: PathBuf,
    w: BufWriter<File>,
}

impl Jsonl {
    pub(crate) fn create(path: &Path) -> Result<Self> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(Self { path: path.to_path_buf(), w: BufWriter::new(f) })
    }

    pub(crate) fn write<T: Serialize>(&mut self, v: &T) -> Result<()> {
        serde_json::to_writer(&mut self.w, v)?;
        self.w.write_all(b"\n").map_err(|e| Error::io(&self.path, e))
    }

    pub(crate) fn finish(mut self) -> Result<()> {
        self.w.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = Jsonl::create(path)?;
    for it in items {
        w.write(it)?;
    }
    w.finish()
}

pub const SUMMARY_HEADER: &str = "strategy,phase,after_task,task,rate,episodes";

/// Per-seed summary: the success matrix (phase `train`) and final tests
/// (phase = adaptation variant), one row per task.
pub fn summary_csv(cells: &[CellRecord], n_tasks: usize) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for c in cells {
        for (k, row) in c.matrix.iter().enumerate() {
            for (j, r) in row.iter().enumerate() {
                out += &format!("{},train,{k},{j},{r:.6},\n", c.strategy);
            }
        }
        for r in &c.reports {
            out += &format!(
                "{},{},{},{},{:.6},{}\n",
                c.strategy,
                r.variant.label(),
                n_tasks.saturating_sub(1),
                r.task_index,
                r.final_rate,
                r.final_successes.len()
            );
        }
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Train and test every strategy for one replica seed, writing
/// `train.jsonl`, `reports.jsonl`, `checkpoints/` and `summary.csv` under
/// `dir`.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64, dir: &Path) -> Result<(SeedRecord, Vec<Timing>)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ctx = prepare_seed(cfg, seed)?;
    let ckpt = dir.join("checkpoints");
    let mut train_log = Jsonl::create(&dir.join("train.jsonl"))?;
    let mut report_log = Jsonl::create(&dir.join("reports.jsonl"))?;
    let mut cells = Vec::new();
    let mut timings = Vec::new();
    for &kind in &cfg.strategies {
        let t0 = Instant::now();
        let (trained, err) = train_cell(cfg, &ctx, kind, Some(&ckpt));
        for line in &trained.log {
            train_log.write(line)?;
        }
        let train_secs = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let mut status = match err {
            Some(e) => CellStatus::Failed { error: e.to_string() },
            None => CellStatus::Ok,
        };
        let mut reports = Vec::new();
        if status == CellStatus::Ok {
            let tested = save_trained(&ckpt, &trained).and_then(|_| {
                let mut all = Vec::new();
                for v in cell_variants(cfg, kind) {
                    all.extend(test_cell(cfg, &ctx, &trained, v)?);
                }
                Ok(all)
            });
            match tested {
                Ok(r) => reports = r,
                Err(e) => status = CellStatus::Failed { error: e.to_string() },
            }
        }
        for r in &reports {
            report_log.write(&ReportLine { strategy: kind, report: r.clone() })?;
        }
        timings.push(Timing { seed, strategy: kind, train_secs, test_secs: t1.elapsed().as_secs_f64() });
        cells.push(CellRecord {
            strategy: kind,
            status,
            matrix: trained.matrix,
            exhausted: trained.exhausted,
            reports,
        });
    }
    train_log.finish()?;
    report_log.finish()?;
    write_text(&dir.join("summary.csv"), &summary_csv(&cells, ctx.suite.len()))?;
    Ok((SeedRecord { seed, cells }, timings))
}

/// Every seed of the experiment. Failed cells are recorded and the run
/// continues; callers inspect [`RunRecord::failed_cells`].
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let run_dir = cfg.run_dir();
    std::fs::create_dir_all(&run_dir).map_err(|e| Error::io(&run_dir, e))?;
    write_text(&run_dir.join("config.toml"), &cfg.to_toml_string()?)?;
    let mut record = RunRecord { config_hash: cfg.hash(), config: cfg.clone(), seeds: Vec::new(), timings: Vec::new() };
    for &seed in &cfg.seeds {
        let (s, t) = run_seed(cfg, seed, &cfg.seed_dir(seed))?;
        record.seeds.push(s);
        record.timings.extend(t);
    }
    write_text(&run_dir.join("record.json"), &(serde_json::to_string_pretty(&record)? + "\n"))?;
    write_text(&run_dir.join("timings.json"), &(serde_json::to_string_pretty(&record.timings)? + "\n"))?;
    Ok(record)
}
