//! Experiment configuration, orchestration over seeds and strategies, metric
//! aggregation and run-record persistence.

mod config;
mod metrics;
mod run;

pub use config::{ExperimentConfig, PolicySection, RecallSection, RetrievalSection, SuiteSection, DEFAULT_SEEDS};
pub use metrics::{
    asr, compare, format_pct, method_label, method_scores, retrieval_accuracy, ComparisonTable, Delta, MethodScore,
    COLUMN_ORDER, RETRIEVAL_REFERENCE,
};
pub use run::{
    build_suite, cell_variants, collect_demos, load_trained, prepare_seed, run_experiment, run_seed, save_trained,
    summary_csv, test_cell, train_cell, write_jsonl, CellRecord, CellStatus, ReportLine, RunRecord, SeedContext,
    SeedRecord, Timing, TrainLog, TrainedCell, SUMMARY_HEADER,
};
