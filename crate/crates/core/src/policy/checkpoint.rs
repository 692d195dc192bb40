//! Flat binary parameter files.
//!
//! Layout (little endian):
//!
//! ```text
//! magic    8 bytes  "WLAPOLCY"
//! version  u32
//! count    u32      number of tensors
//! shapes   count x (rows u32, cols u32)
//! payload  f64 x sum(rows * cols)
//! ```
//!
//! A JSON sidecar (`<file>.json`) carries the policy configuration and any
//! training hyperparameters.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{PolicyConfig, PolicyParams};
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"WLAPOLCY";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    version: u32,
    policy: PolicyConfig,
    #[serde(default)]
    hyperparameters: serde_json::Value,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Encode tensors with the given shapes into the binary format.
pub fn write_params(shapes: &[(usize, usize)], values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + shapes.len() * 8 + values.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(shapes.len() as u32).to_le_bytes());
    for &(r, c) in shapes {
        out.extend_from_slice(&(r as u32).to_le_bytes());
        out.extend_from_slice(&(c as u32).to_le_bytes());
    }
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decode the binary format into `(shapes, values)`.
pub fn read_params(path: &Path, bytes: &[u8]) -> Result<(Vec<(usize, usize)>, Vec<f64>)> {
    let fail = |r: &str| Error::format(path, r.to_string());
    let u32_at = |at: usize| -> Result<u32> {
        bytes
            .get(at..at + 4)
            .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
            .ok_or_else(|| fail("truncated header"))
    };
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(fail("bad magic"));
    }
    let version = u32_at(8)?;
    if version != VERSION {
        return Err(fail(&format!("unsupported version {version}")));
    }
    let count = u32_at(12)? as usize;
    let mut shapes = Vec::with_capacity(count);
    let mut at = 16;
    for _ in 0..count {
        shapes.push((u32_at(at)? as usize, u32_at(at + 4)? as usize));
        at += 8;
    }
    let n: usize = shapes.iter().map(|(r, c)| r * c).sum();
    let payload = &bytes[at.min(bytes.len())..];
    if payload.len() != n * 8 {
        return Err(fail(&format!("payload holds {} bytes, expected {}", payload.len(), n * 8)));
    }
    let values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((shapes, values))
}

pub fn save_checkpoint(path: &Path, params: &PolicyParams, hyper: serde_json::Value) -> Result<()> {
    let bytes = write_params(&params.config.shapes(), &params.values);
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let side = Sidecar { version: VERSION, policy: params.config, hyperparameters: hyper };
    let sp = sidecar_path(path);
    std::fs::write(&sp, serde_json::to_string_pretty(&side)? + "\n").map_err(|e| Error::io(&sp, e))
}

pub fn load_checkpoint(path: &Path) -> Result<PolicyParams> {
    let sp = sidecar_path(path);
    let text = std::fs::read_to_string(&sp).map_err(|e| Error::io(&sp, e))?;
    let side: Sidecar = serde_json::from_str(&text).map_err(|e| Error::format(&sp, e.to_string()))?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (shapes, values) = read_params(path, &bytes)?;
    if shapes != side.policy.shapes() {
        return Err(Error::format(path, "shape table does not match sidecar configuration"));
    }
    Ok(PolicyParams { config: side.policy, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact_and_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let p = PolicyParams::init(PolicyConfig { hidden: 8, init_seed: 4, ..Default::default() });
        let a = dir.path().join("a.bin");
        let b = dir.path().join("b.bin");
        save_checkpoint(&a, &p, serde_json::json!({"lr": 1e-4})).unwrap();
        save_checkpoint(&b, &p, serde_json::json!({"lr": 1e-4})).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert_eq!(load_checkpoint(&a).unwrap(), p);
    }

    #[test]
    fn corrupt_files_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = PolicyParams::init(PolicyConfig { hidden: 4, ..Default::default() });
        let a = dir.path().join("a.bin");
        save_checkpoint(&a, &p, serde_json::Value::Null).unwrap();
        let mut bytes = std::fs::read(&a).unwrap();
        bytes.truncate(bytes.len() - 3);
        std::fs::write(&a, &bytes).unwrap();
        assert!(matches!(load_checkpoint(&a), Err(Error::Format { .. })));
        bytes[0] = b'X';
        std::fs::write(&a, &bytes).unwrap();
        assert!(matches!(load_checkpoint(&a), Err(Error::Format { .. })));
    }
}
