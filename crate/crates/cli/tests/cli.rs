use std::path::Path;
use std::process::{Command, Output};

fn wla(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wla")).args(args).current_dir(cwd).output().expect("binary runs")
}

const TINY: &str = r#"
output_dir = "runs"
seeds = [2]
strategies = ["er", "packnet"]
demos_per_task = 2
eval_episodes = 2

[suite]
n_tasks = 2

[train]
epochs = 2
eval_every = 1
probe_episodes = 1

[recall]
quiz_episodes = 2
test_episodes = 2

[adapt]
epochs = 1
"#;

fn tiny_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tiny.toml"), TINY).unwrap();
    dir
}

fn only_run_dir(root: &Path) -> std::path::PathBuf {
    let mut dirs: Vec<_> = std::fs::read_dir(root.join("runs")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dirs.len(), 1);
    dirs.remove(0)
}

#[test]
fn run_compare_report() {
    let dir = tiny_dir();
    let out = wla(&["run", "--config", "tiny.toml"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("ER-WLA"), "{text}");
    let run = only_run_dir(dir.path());
    for f in ["record.json", "config.toml", "comparison.csv", "2/train.jsonl", "2/reports.jsonl", "2/summary.csv"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let run_s = run.to_str().unwrap();
    let out = wla(&["compare", run_s, "--csv", "cmp.csv"], dir.path());
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("cmp.csv")).unwrap();
    assert!(csv.starts_with("benchmark,method,asr_mean,asr_std"));
    let out = wla(&["report", run_s], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("reference line: 0.375"));
}

#[test]
fn train_then_adapt_test() {
    let dir = tiny_dir();
    let base = ["--config", "tiny.toml", "--strategies", "er", "--variants", "wla,none"];
    let out = wla(&[&["train"], &base[..]].concat(), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = wla(&[&["adapt-test"], &base[..]].concat(), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = only_run_dir(dir.path());
    let reports = std::fs::read_to_string(run.join("2/reports.jsonl")).unwrap();
    assert_eq!(reports.lines().count(), 4);
    let first: serde_json::Value = serde_json::from_str(reports.lines().next().unwrap()).unwrap();
    assert_eq!(first["strategy"], "er");
    assert!(first["final_successes"].is_array());
}

#[test]
fn suite_and_collect() {
    let dir = tempfile::tempdir().unwrap();
    let out = wla(&["gen-suite", "--family", "goal", "--n-tasks", "4", "--out", "s.json"], dir.path());
    assert!(out.status.success());
    let out = wla(&["collect", "--suite", "s.json", "--per-task", "2", "--out", "d.jsonl"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let demos = std::fs::read_to_string(dir.path().join("d.jsonl")).unwrap();
    assert_eq!(demos.lines().count(), 8);
}

#[test]
fn config_errors_exit_2() {
    let dir = tiny_dir();
    std::fs::write(dir.path().join("bad.toml"), "no_such_key = 1\n").unwrap();
    for args in [
        vec!["run", "--config", "bad.toml"],
        vec!["run", "--config", "missing.toml"],
        vec!["run", "--config", "tiny.toml", "--set", "train.optimizer.lr=-1"],
        vec!["train", "--config", "tiny.toml", "--strategies", "magic"],
        vec!["gen-suite", "--family", "nope", "--out", "x.json"],
        vec!["frobnicate"],
    ] {
        let out = wla(&args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn runtime_errors_exit_3() {
    let dir = tiny_dir();
    let out = wla(&["report", "runs/none"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let out = wla(&["adapt-test", "--config", "tiny.toml"], dir.path());
    assert_eq!(out.status.code(), Some(3), "untrained checkpoints are a runtime failure");
}
