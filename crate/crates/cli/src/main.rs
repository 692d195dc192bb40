//! `wla`: generate suites, collect demonstrations, train lifelong policies,
//! run the recall pipeline and compare results.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime failure.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wla_core::harness::{
    self, asr, compare, format_pct, method_scores, ExperimentConfig, ReportLine, RunRecord, SeedContext, TrainLog,
    RETRIEVAL_REFERENCE,
};
use wla_core::taskworld::io::{read_suite, write_demos, write_suite, SuiteFile};
use wla_core::taskworld::{make_suite_with, Family, DEFAULT_PARAPHRASES};

use config::ConfigArgs;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl From<wla_core::Error> for CliError {
    fn from(e: wla_core::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "wla", version, about = "Lifelong imitation learning with weighted local adaptation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a task suite as JSON.
    GenSuite {
        #[arg(long, default_value = "spatial")]
        family: String,
        #[arg(long, default_value_t = 5)]
        n_tasks: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_PARAPHRASES)]
        paraphrases: usize,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Collect expert demonstrations for a suite as JSON lines.
    Collect {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long, default_value_t = 50)]
        per_task: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, short)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Lifelong training of each configured strategy and seed.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Quiz, retrieve, adapt and test previously trained strategies.
    AdaptTest {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Train and test end to end, then print the comparison table.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Compare finished runs.
    Compare {
        /// Run directories (`runs/<hash>`).
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Summarise one finished run.
    Report { run: PathBuf },
}

fn write(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Runtime(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn gen_suite(family: &str, n_tasks: usize, seed: u64, paraphrases: usize, out: &Path) -> Result<(), CliError> {
    let family: Family = family.parse()?;
    let tasks = make_suite_with(family, n_tasks, seed, paraphrases)?;
    write_suite(out, &SuiteFile::new(family, seed, tasks))?;
    println!("wrote {n_tasks} {family} tasks to {}", out.display());
    Ok(())
}

fn collect(suite: &Path, per_task: usize, seed: u64, out: &Path, cfg: &ConfigArgs) -> Result<(), CliError> {
    let cfg = cfg.load()?;
    let suite = read_suite(suite)?;
    let first = suite.tasks.first().ok_or_else(|| CliError::Config("suite has no tasks".into()))?;
    let enc = wla_core::encoders::Encoders::new(&cfg.encoder, first.obs_len());
    let demos = harness::collect_demos(&suite.tasks, per_task, &enc, seed)?;
    let flat: Vec<_> = demos.into_iter().flatten().collect();
    write_demos(out, &flat)?;
    println!("wrote {} demonstrations to {}", flat.len(), out.display());
    Ok(())
}

fn train(cfg: &ExperimentConfig) -> Result<bool, CliError> {
    let mut ok = true;
    for &seed in &cfg.seeds {
        let dir = cfg.seed_dir(seed);
        let ckpt = dir.join("checkpoints");
        let ctx = harness::prepare_seed(cfg, seed)?;
        let mut log: Vec<TrainLog> = Vec::new();
        for &kind in &cfg.strategies {
            let (cell, err) = harness::train_cell(cfg, &ctx, kind, Some(&ckpt));
            log.extend(cell.log.iter().cloned());
            match err {
                Some(e) => {
                    ok = false;
                    eprintln!("seed {seed} {kind}: {e}");
                }
                None => {
                    harness::save_trained(&ckpt, &cell)?;
                    let last = cell.matrix.last().map(|r| asr(r)).transpose()?.map_or(0.0, |(m, _)| m);
                    println!("seed {seed} {:<8} ASR after last task {:.2}", kind.label(), 100.0 * last);
                }
            }
        }
        harness::write_jsonl(&dir.join("train.jsonl"), &log)?;
    }
    Ok(ok)
}

fn adapt_test(cfg: &ExperimentConfig) -> Result<bool, CliError> {
    let mut ok = true;
    for &seed in &cfg.seeds {
        let dir = cfg.seed_dir(seed);
        let ctx = SeedContext::without_demos(cfg, seed)?;
        let mut lines = Vec::new();
        for &kind in &cfg.strategies {
            let cell = match harness::load_trained(&dir.join("checkpoints"), kind) {
                Ok(c) => c,
                Err(e) => {
                    ok = false;
                    eprintln!("seed {seed} {kind}: {e}");
                    continue;
                }
            };
            for v in harness::cell_variants(cfg, kind) {
                match harness::test_cell(cfg, &ctx, &cell, v) {
                    Ok(reports) => {
                        let (m, s) = asr(&reports.iter().map(|r| r.final_rate).collect::<Vec<_>>())?;
                        println!("seed {seed} {:<12} {}", harness::method_label(kind, v), format_pct(m, s));
                        lines.extend(reports.into_iter().map(|report| ReportLine { strategy: kind, report }));
                    }
                    Err(e) => {
                        ok = false;
                        eprintln!("seed {seed} {kind} {}: {e}", v.label());
                    }
                }
            }
        }
        harness::write_jsonl(&dir.join("reports.jsonl"), &lines)?;
    }
    Ok(ok)
}

fn run(cfg: &ExperimentConfig) -> Result<bool, CliError> {
    let record = harness::run_experiment(cfg)?;
    let table = compare(std::slice::from_ref(&record))?;
    print!("{}", table.to_text());
    write(&cfg.run_dir().join("comparison.csv"), &table.to_csv())?;
    println!("run directory: {}", cfg.run_dir().display());
    let failed = record.failed_cells();
    for (seed, kind, e) in &failed {
        eprintln!("seed {seed} {kind} failed: {e}");
    }
    Ok(failed.is_empty())
}

fn load_records(runs: &[PathBuf]) -> Result<Vec<RunRecord>, CliError> {
    runs.iter().map(|r| RunRecord::load(r).map_err(|e| CliError::Runtime(e.to_string()))).collect()
}

fn report(run: &PathBuf) -> Result<(), CliError> {
    let record = load_records(std::slice::from_ref(run))?.remove(0);
    let c = &record.config;
    println!("run {}: {} suite, {} tasks, seeds {:?}", record.config_hash, c.suite.family, c.suite.n_tasks, c.seeds);
    for &kind in &c.strategies {
        let finals: Vec<f64> =
            record.cells(kind).filter_map(|(_, cell)| cell.matrix.last()).flatten().copied().collect();
        if let Ok((m, s)) = asr(&finals) {
            println!("{:<10} after training: {}", kind.label(), format_pct(m, s));
        }
        let exhausted: usize = record.cells(kind).map(|(_, cell)| cell.exhausted.len()).sum();
        if exhausted > 0 {
            println!("{:<10} tasks refused for lack of capacity: {exhausted}", kind.label());
        }
    }
    for m in method_scores(&record)? {
        let mark = if m.retrieval_accuracy >= RETRIEVAL_REFERENCE { "" } else { "  (below reference)" };
        println!(
            "{:<12} final {}  retrieval accuracy {:.3}{mark}",
            m.method,
            format_pct(m.mean, m.std),
            m.retrieval_accuracy
        );
    }
    println!("retrieval accuracy reference line: {RETRIEVAL_REFERENCE}");
    for (seed, kind, e) in record.failed_cells() {
        println!("failed: seed {seed} {kind}: {e}");
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<bool, CliError> {
    match cli.cmd {
        Cmd::GenSuite { family, n_tasks, seed, paraphrases, out } => {
            gen_suite(&family, n_tasks, seed, paraphrases, &out).map(|_| true)
        }
        Cmd::Collect { suite, per_task, seed, out, cfg } => collect(&suite, per_task, seed, &out, &cfg).map(|_| true),
        Cmd::Train { cfg } => train(&cfg.load()?),
        Cmd::AdaptTest { cfg } => adapt_test(&cfg.load()?),
        Cmd::Run { cfg } => run(&cfg.load()?),
        Cmd::Compare { runs, csv } => {
            let table = compare(&load_records(&runs)?)?;
            print!("{}", table.to_text());
            if let Some(p) = csv {
                write(&p, &table.to_csv())?;
            }
            Ok(true)
        }
        Cmd::Report { run } => report(&run).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            match &e {
                CliError::Config(m) => eprintln!("error: {m}"),
                CliError::Runtime(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(e.code())
        }
    }
}
