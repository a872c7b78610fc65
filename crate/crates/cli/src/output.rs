//! Output directory bookkeeping: every written file is hashed into
//! `manifest.json`. Wall-clock data goes to `metadata.json` only, so the
//! manifest is reproducible.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// A file, or every file below a directory in sorted order.
fn expand(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut out = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
        .with_context(|| format!("listing {}", path.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    entries.sort();
    for e in entries {
        out.extend(expand(&e)?);
    }
    Ok(out)
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: &'a RunConfig,
    seeds: &'a BTreeMap<String, u64>,
    inputs: BTreeMap<String, String>,
    outputs: &'a BTreeMap<String, String>,
}

#[derive(Serialize)]
struct Metadata {
    tool_version: &'static str,
    argv: Vec<String>,
    started_unix: f64,
    finished_unix: f64,
}

pub struct OutDir {
    root: PathBuf,
    outputs: BTreeMap<String, String>,
    seeds: BTreeMap<String, u64>,
    started: f64,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(OutDir { root: root.to_path_buf(), outputs: BTreeMap::new(), seeds: BTreeMap::new(), started: unix_now() })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.seeds.insert(name.to_string(), value);
    }

    pub fn write(&mut self, rel: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        let bytes = contents.as_ref();
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.insert(rel.to_string(), sha256_hex(bytes));
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<PathBuf> {
        let text = serde_json::to_string_pretty(value).context("serializing output")? + "\n";
        self.write(rel, text)
    }

    /// Hashes a file some other component wrote under the output directory.
    pub fn register(&mut self, rel: &str) -> Result<()> {
        let path = self.root.join(rel);
        let bytes = std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        self.outputs.insert(rel.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn finish(self, command: &str, cfg: &RunConfig) -> Result<()> {
        let mut inputs = BTreeMap::new();
        for p in cfg.input_files() {
            for file in expand(&p)? {
                let bytes = std::fs::read(&file).with_context(|| format!("hashing input {}", file.display()))?;
                inputs.insert(file.display().to_string(), sha256_hex(&bytes));
            }
        }
        let manifest = Manifest { command, config: cfg, seeds: &self.seeds, inputs, outputs: &self.outputs };
        let text = serde_json::to_string_pretty(&manifest).context("serializing manifest")? + "\n";
        std::fs::write(self.root.join("manifest.json"), text).context("writing manifest.json")?;
        let meta = Metadata {
            tool_version: env!("CARGO_PKG_VERSION"),
            argv: std::env::args().collect(),
            started_unix: self.started,
            finished_unix: unix_now(),
        };
        let text = serde_json::to_string_pretty(&meta).context("serializing metadata")? + "\n";
        std::fs::write(self.root.join("metadata.json"), text).context("writing metadata.json")?;
        Ok(())
    }
}
