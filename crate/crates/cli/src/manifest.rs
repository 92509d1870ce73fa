//! Record of what a run read and wrote, with content hashes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory when inside it.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageEntry {
    pub name: String,
    pub duration_ms: f64,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub name: String,
    pub stage: String,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<FileEntry>,
    pub stages: Vec<StageEntry>,
    pub artifacts: Vec<Artifact>,
    /// Stage results worth a glance: chosen k, edge counts and the like.
    pub results: BTreeMap<String, serde_json::Value>,
    #[serde(skip)]
    root: PathBuf,
}

pub fn sha256_file(path: &Path) -> anyhow::Result<(u64, String)> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let digest = Sha256::digest(&bytes);
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok((bytes.len() as u64, hex))
}

impl Manifest {
    pub fn new(command: &str, root: impl Into<PathBuf>) -> Self {
        Manifest {
            tool: "fedipol".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            parameters: BTreeMap::new(),
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            stages: Vec::new(),
            artifacts: Vec::new(),
            results: BTreeMap::new(),
            root: root.into(),
        }
    }

    fn entry(&self, path: &Path) -> anyhow::Result<FileEntry> {
        let (bytes, sha256) = sha256_file(path)?;
        let shown = path.strip_prefix(&self.root).unwrap_or(path);
        Ok(FileEntry {
            path: shown.to_string_lossy().replace('\\', "/"),
            bytes,
            sha256,
        })
    }

    pub fn input(&mut self, path: &Path) -> anyhow::Result<()> {
        let e = self.entry(path)?;
        if !self.inputs.contains(&e) {
            self.inputs.push(e);
        }
        Ok(())
    }

    pub fn artifact(&mut self, name: &str, stage: &str, files: &[PathBuf]) -> anyhow::Result<()> {
        let files = files.iter().map(|f| self.entry(f)).collect::<anyhow::Result<_>>()?;
        self.artifacts.push(Artifact {
            name: name.into(),
            stage: stage.into(),
            files,
        });
        Ok(())
    }

    pub fn stage(&mut self, name: &str, took: Duration, error: Option<String>) {
        self.stages.push(StageEntry {
            name: name.into(),
            duration_ms: took.as_secs_f64() * 1e3,
            ok: error.is_none(),
            error,
        });
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        self.results.insert(key.into(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
    }

    /// Every file written, in order.
    pub fn files(&self) -> impl Iterator<Item = &FileEntry> {
        self.artifacts.iter().flat_map(|a| &a.files)
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}
