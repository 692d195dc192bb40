//! Suite documents (JSON) and demonstration sets (JSON-lines).
//!
//! Demonstration records serialize their fields in declaration order:
//! `frames[{obs, proprio, action}]`, `vision_embeds`, `lang_embed`,
//! `description`, `eval_task_id`. Floats are written as round-trippable
//! float64 literals.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Demonstration, Family, TaskSpec};
use crate::{Error, Result};

pub const SUITE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteFile {
    pub version: u32,
    pub family: Family,
    pub seed: u64,
    pub tasks: Vec<TaskSpec>,
}

impl SuiteFile {
    pub fn new(family: Family, seed: u64, tasks: Vec<TaskSpec>) -> Self {
        Self { version: SUITE_VERSION, family, seed, tasks }
    }
}

pub fn write_suite(path: &Path, suite: &SuiteFile) -> Result<()> {
    let text = serde_json::to_string_pretty(suite)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_suite(path: &Path) -> Result<SuiteFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let suite: SuiteFile = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    if suite.version != SUITE_VERSION {
        return Err(Error::format(path, format!("unsupported suite version {}", suite.version)));
    }
    Ok(suite)
}

pub fn write_demos(path: &Path, demos: &[Demonstration]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for d in demos {
        serde_json::to_writer(&mut w, d)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_demos(path: &Path) -> Result<Vec<Demonstration>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let demo: Demonstration =
            serde_json::from_str(&line).map_err(|e| Error::format(path, format!("line {}: {e}", i + 1)))?;
        out.push(demo);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::{EncoderConfig, Encoders};
    use crate::taskworld::{expert_rollout, make_suite};

    #[test]
    fn suite_and_demo_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let tasks = make_suite(Family::Goal, 4, 3).unwrap();
        let suite = SuiteFile::new(Family::Goal, 3, tasks.clone());
        let p = dir.path().join("suite.json");
        write_suite(&p, &suite).unwrap();
        assert_eq!(read_suite(&p).unwrap(), suite);

        let enc = Encoders::new(&EncoderConfig::default(), tasks[0].obs_len());
        let demos: Vec<_> = (0..3).map(|s| expert_rollout(&tasks[1], s, &enc).unwrap()).collect();
        let q = dir.path().join("demos.jsonl");
        write_demos(&q, &demos).unwrap();
        assert_eq!(read_demos(&q).unwrap(), demos);
    }

    #[test]
    fn bad_suite_version_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut suite = SuiteFile::new(Family::Spatial, 1, make_suite(Family::Spatial, 1, 1).unwrap());
        suite.version = 99;
        let p = dir.path().join("suite.json");
        write_suite(&p, &suite).unwrap();
        assert!(matches!(read_suite(&p), Err(Error::Format { .. })));
    }
}
