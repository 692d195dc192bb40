//! Memory files: a JSON header line followed by one demonstration per line.
//!
//! ```text
//! {"format":"wla-memory","version":1,"admission":{..},"count":N,"seen":S,"per_task":{..},"rng":{..}}
//! {demonstration}
//! ...
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Admission, EpisodicMemory};
use crate::taskworld::Demonstration;
use crate::{Error, Result};

pub const MEMORY_FORMAT: &str = "wla-memory";
pub const MEMORY_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RngState {
    seed: String,
    stream: u64,
    word_pos: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    admission: Admission,
    count: usize,
    seen: u64,
    per_task: BTreeMap<usize, usize>,
    rng: RngState,
}

pub fn save(mem: &EpisodicMemory, path: &Path) -> Result<()> {
    let (per_task, rng) = mem.parts();
    let header = Header {
        format: MEMORY_FORMAT.into(),
        version: MEMORY_VERSION,
        admission: mem.admission(),
        count: mem.len(),
        seen: mem.seen(),
        per_task: per_task.clone(),
        rng: RngState {
            seed: hex::encode(rng.get_seed()),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        },
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n").map_err(io)?;
    for d in mem.demos() {
        serde_json::to_writer(&mut w, d)?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Load a memory file. Nothing is returned unless the whole file validates.
pub fn load(path: &Path) -> Result<EpisodicMemory> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let head = lines.next().ok_or_else(|| Error::format(path, "missing header"))?.map_err(|e| Error::io(path, e))?;
    let header: Header = serde_json::from_str(&head).map_err(|e| Error::format(path, format!("bad header: {e}")))?;
    if header.format != MEMORY_FORMAT {
        return Err(Error::format(path, format!("unexpected format tag `{}`", header.format)));
    }
    if header.version != MEMORY_VERSION {
        return Err(Error::format(path, format!("unsupported version {}", header.version)));
    }
    let mut demos = Vec::with_capacity(header.count);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let d: Demonstration =
            serde_json::from_str(&line).map_err(|e| Error::format(path, format!("record {}: {e}", i + 1)))?;
        demos.push(d);
    }
    if demos.len() != header.count {
        return Err(Error::format(path, format!("header announces {} records, found {}", header.count, demos.len())));
    }
    let seed_bytes: [u8; 32] = hex::decode(&header.rng.seed)
        .ok()
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| Error::format(path, "bad rng seed"))?;
    let word_pos: u128 = header.rng.word_pos.parse().map_err(|_| Error::format(path, "bad rng position"))?;
    let mut rng = ChaCha8Rng::from_seed(seed_bytes);
    rng.set_stream(header.rng.stream);
    rng.set_word_pos(word_pos);
    Ok(EpisodicMemory::from_parts(header.admission, demos, header.per_task, header.seen, rng))
}

#[cfg(test)]
mod tests {
    use super::super::tests::demo;
    use super::*;

    #[test]
    fn round_trip_preserves_admission_state() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mem.jsonl");
        let mut m = EpisodicMemory::new(Admission::Reservoir { capacity: 5 }, 9);
        for i in 0..40 {
            m.admit(demo(i % 3, 3, i as f64 + 0.123456789));
        }
        save(&m, &p).unwrap();
        let mut back = load(&p).unwrap();
        assert_eq!(back, m);
        // Future admissions behave identically.
        for i in 40..60 {
            assert_eq!(back.admit(demo(0, 2, i as f64)), m.admit(demo(0, 2, i as f64)));
        }
        assert_eq!(back, m);
    }

    #[test]
    fn empty_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mem.jsonl");
        let m = EpisodicMemory::new(Admission::default(), 0);
        save(&m, &p).unwrap();
        assert!(load(&p).unwrap().is_empty());
    }

    #[test]
    fn corrupt_header_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mem.jsonl");
        let mut m = EpisodicMemory::new(Admission::default(), 0);
        m.admit(demo(0, 2, 1.0));
        m.admit(demo(1, 2, 2.0));
        save(&m, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();

        let bad = text.replacen(MEMORY_FORMAT, "not-memory", 1);
        std::fs::write(&p, bad).unwrap();
        assert!(matches!(load(&p), Err(Error::Format { .. })));

        let truncated: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
        std::fs::write(&p, truncated).unwrap();
        assert!(matches!(load(&p), Err(Error::Format { .. })));

        let bumped = text.replacen("\"version\":1", "\"version\":7", 1);
        std::fs::write(&p, bumped).unwrap();
        assert!(matches!(load(&p), Err(Error::Format { .. })));
    }
}
