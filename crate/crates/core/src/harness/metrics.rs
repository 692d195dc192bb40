use serde::{Deserialize, Serialize};

use super::run::RunRecord;
use crate::lifelong::StrategyKind;
use crate::recall::{Adaptation, TaskReport};
use crate::{Error, Result};

/// Retrieval accuracy considered acceptable; drawn as a reference line.
pub const RETRIEVAL_REFERENCE: f64 = 0.375;

/// Column order of the comparison table; other methods follow.
pub const COLUMN_ORDER: [&str; 6] = ["EWC", "AGEM", "AGEM-WLA", "ER", "ER-WLA", "PackNet"];

/// Mean and population standard deviation over all (task, seed) rates.
pub fn asr(rates: &[f64]) -> Result<(f64, f64)> {
    if rates.is_empty() {
        return Err(Error::Input("average success rate of no rates".into()));
    }
    let n = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / n;
    let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// Fraction of retrieved demonstrations that belong to the queried task.
pub fn retrieval_accuracy(report: &TaskReport) -> f64 {
    if report.retrieved_tasks.is_empty() {
        return 0.0;
    }
    let eval_task = report.task_index;
    report.retrieved_tasks.iter().filter(|&&t| t == eval_task).count() as f64 / report.retrieved_tasks.len() as f64
}

/// `"mean ± std"` in percent with two decimals.
pub fn format_pct(mean: f64, std: f64) -> String {
    format!("{:.2} ± {:.2}", 100.0 * mean, 100.0 * std)
}

/// Table label of a strategy under an adaptation variant.
pub fn method_label(strategy: StrategyKind, variant: Adaptation) -> String {
    match variant {
        Adaptation::None => strategy.label().to_string(),
        v => format!("{}-{}", strategy.label(), v.label()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodScore {
    pub method: String,
    pub strategy: StrategyKind,
    pub variant: Adaptation,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    pub retrieval_accuracy: f64,
}

/// Final-test ASR of every (strategy, variant) present in a record.
pub fn method_scores(record: &RunRecord) -> Result<Vec<MethodScore>> {
    let mut out = Vec::new();
    for strategy in &record.config.strategies {
        for variant in record.variants_of(*strategy) {
            let reports: Vec<&TaskReport> = record.reports(*strategy, variant).collect();
            if reports.is_empty() {
                continue;
            }
            let rates: Vec<f64> = reports.iter().map(|r| r.final_rate).collect();
            let (mean, std) = asr(&rates)?;
            let ra = reports.iter().map(|r| r.retrieval_accuracy).sum::<f64>() / reports.len() as f64;
            out.push(MethodScore {
                method: method_label(*strategy, variant),
                strategy: *strategy,
                variant,
                mean,
                std,
                n: rates.len(),
                retrieval_accuracy: ra,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub benchmark: String,
    pub strategy: StrategyKind,
    /// `"ULA"` or `"none"`.
    pub baseline: String,
    /// WLA minus baseline, percentage points.
    pub points: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub columns: Vec<String>,
    /// One row per record: benchmark label and a score per column.
    pub rows: Vec<(String, Vec<Option<MethodScore>>)>,
    pub deltas: Vec<Delta>,
}

fn benchmark_label(r: &RunRecord) -> String {
    format!("{}-{} [{}]", r.config.suite.family, r.config.suite.n_tasks, r.config_hash)
}

/// Strategies-by-benchmark table of final ASR plus WLA deltas.
pub fn compare(records: &[RunRecord]) -> Result<ComparisonTable> {
    let first = records.first().ok_or_else(|| Error::Input("nothing to compare".into()))?;
    for r in &records[1..] {
        if r.config.suite != first.config.suite {
            return Err(Error::Input(format!(
                "records {} and {} use different suites",
                first.config_hash, r.config_hash
            )));
        }
    }
    let scored = records.iter().map(|r| Ok((benchmark_label(r), method_scores(r)?))).collect::<Result<Vec<_>>>()?;

    let mut columns: Vec<String> = Vec::new();
    for c in COLUMN_ORDER {
        if scored.iter().any(|(_, s)| s.iter().any(|m| m.method == c)) {
            columns.push(c.to_string());
        }
    }
    for (_, s) in &scored {
        for m in s {
            if !columns.contains(&m.method) {
                columns.push(m.method.clone());
            }
        }
    }

    let mut rows = Vec::new();
    let mut deltas = Vec::new();
    for (label, s) in scored {
        let find = |st: StrategyKind, v: Adaptation| s.iter().find(|m| m.strategy == st && m.variant == v);
        for m in s.iter().filter(|m| m.variant == Adaptation::Weighted) {
            for (v, name) in [(Adaptation::Uniform, "ULA"), (Adaptation::None, "none")] {
                if let Some(b) = find(m.strategy, v) {
                    deltas.push(Delta {
                        benchmark: label.clone(),
                        strategy: m.strategy,
                        baseline: name.to_string(),
                        points: 100.0 * (m.mean - b.mean),
                    });
                }
            }
        }
        let cells = columns.iter().map(|c| s.iter().find(|m| &m.method == c).cloned()).collect();
        rows.push((label, cells));
    }
    Ok(ComparisonTable { columns, rows, deltas })
}

impl ComparisonTable {
    /// Long-form CSV: one line per (benchmark, method).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("benchmark,method,asr_mean,asr_std,n,retrieval_accuracy\n");
        for (label, cells) in &self.rows {
            for m in cells.iter().flatten() {
                out +=
                    &format!("{label},{},{:.6},{:.6},{},{:.6}\n", m.method, m.mean, m.std, m.n, m.retrieval_accuracy);
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let cell = |m: &Option<MethodScore>| m.as_ref().map_or("-".to_string(), |m| format_pct(m.mean, m.std));
        let label_w = self.rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max("benchmark".len());
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.len()).collect();
        for (_, cells) in &self.rows {
            for (w, c) in widths.iter_mut().zip(cells) {
                *w = (*w).max(cell(c).chars().count());
            }
        }
        let mut out = format!("{:<label_w$}", "benchmark");
        for (c, w) in self.columns.iter().zip(&widths) {
            out += &format!("  {c:>w$}");
        }
        out.push('\n');
        for (label, cells) in &self.rows {
            out += &format!("{label:<label_w$}");
            for (c, w) in cells.iter().zip(&widths) {
                let s = cell(c);
                let pad = w.saturating_sub(s.chars().count());
                out += &format!("  {}{s}", " ".repeat(pad));
            }
            out.push('\n');
        }
        out += "ASR in percent, mean ± population std over tasks and seeds jointly.\n";
        for d in &self.deltas {
            out += &format!("{}: {}-WLA vs {}: {:+.2} points\n", d.benchmark, d.strategy.label(), d.baseline, d.points);
        }
        out
    }
}
