//! On-disk workspace: inputs, built tables, reports, manifest and run log.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const INPUTS: [&str; 5] = [
    "events.csv",
    "stations.csv",
    "schedule.csv",
    "shortcuts.csv",
    "boardings.csv",
];
pub const METRICS: &str = "tables/metrics.json";
const MANIFEST: &str = "manifest.json";
const LOG: &str = "log.jsonl";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    /// Hash over all input file hashes.
    pub dataset_hash: String,
    pub inputs: BTreeMap<String, String>,
    /// When the tables were last built.
    pub built_at: Option<String>,
    /// Artifact path (relative to the workspace) to its sha256.
    pub artifacts: BTreeMap<String, String>,
}

pub struct Workspace {
    root: PathBuf,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Current time, or `SOURCE_DATE_EPOCH` when set.
pub fn now() -> String {
    let t = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| DateTime::<Utc>::from_timestamp(secs, 0))
        .unwrap_or_else(Utc::now);
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Workspace { root: root.into() }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn input(&self, name: &str) -> PathBuf {
        self.root.join("inputs").join(name)
    }

    pub fn exists(&self) -> bool {
        self.path(MANIFEST).is_file()
    }

    pub fn has_tables(&self) -> bool {
        self.path(METRICS).is_file()
    }

    pub fn manifest(&self) -> Result<Manifest> {
        if !self.exists() {
            bail!(
                "workspace {} not initialized: run `busroute ingest` first",
                self.root.display()
            );
        }
        let text = fs::read_to_string(self.path(MANIFEST)).context("reading manifest")?;
        serde_json::from_str(&text).context("parsing manifest")
    }

    pub fn save_manifest(&self, manifest: &Manifest) -> Result<()> {
        let mut text = serde_json::to_string_pretty(manifest)?;
        text.push('\n');
        self.write_raw(MANIFEST, text.as_bytes())
    }

    /// Hashes of the input files currently on disk, and the dataset hash.
    pub fn hash_inputs(&self) -> Result<(BTreeMap<String, String>, String)> {
        let mut inputs = BTreeMap::new();
        let mut all = Sha256::new();
        for name in INPUTS {
            let bytes =
                fs::read(self.input(name)).with_context(|| format!("reading input {name}"))?;
            let h = sha256_hex(&bytes);
            all.update(name.as_bytes());
            all.update(h.as_bytes());
            inputs.insert(name.to_string(), h);
        }
        Ok((inputs, hex::encode(all.finalize())))
    }

    /// Writes via a temporary file in the target directory, then renames.
    fn write_raw(&self, rel: &str, bytes: &[u8]) -> Result<()> {
        let target = self.path(rel);
        let dir = target.parent().unwrap_or(&self.root);
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&target)
            .with_context(|| format!("writing {}", target.display()))?;
        Ok(())
    }

    /// Atomic write that is also recorded in the manifest's artifact list.
    pub fn write_artifact(&self, manifest: &mut Manifest, rel: &str, bytes: &[u8]) -> Result<()> {
        self.write_raw(rel, bytes)?;
        manifest
            .artifacts
            .insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn copy_input(&self, name: &str, source: &Path) -> Result<()> {
        let bytes = fs::read(source).with_context(|| format!("reading {}", source.display()))?;
        self.write_raw(&format!("inputs/{name}"), &bytes)
    }

    pub fn append_log(&self, entry: &serde_json::Value) -> Result<()> {
        let path = self.path(LOG);
        let mut existing = fs::read(&path).unwrap_or_default();
        existing.extend_from_slice(serde_json::to_string(entry)?.as_bytes());
        existing.push(b'\n');
        self.write_raw(LOG, &existing)
    }
}
