//! Append-only artifact store: `<workdir>/<stage>/v<N>/`, each version
//! sealed by a `manifest.json` written last.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use stylecluster::util::sha256_hex;

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the workdir for artifacts inside it, as given otherwise.
    pub path: String,
    /// `None` for volatile outputs (wall-clock timings and the like).
    pub sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub config_hash: String,
    /// The settings this stage read, for reproduction by hand.
    pub params: serde_json::Value,
    /// Upstream stage versions, e.g. `"graphs": "graphs/v2"`.
    pub upstream: BTreeMap<String, String>,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
}

#[derive(Debug, Clone)]
pub struct StageRun {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl StageRun {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Workdir-relative name of this version, e.g. `graphs/v2`.
    pub fn label(&self) -> String {
        format!("{}/v{}", self.manifest.stage, self.manifest.version)
    }
}

#[derive(Debug, Clone)]
pub struct Workdir {
    root: PathBuf,
}

fn parse_version(name: &str) -> Option<u32> {
    name.strip_prefix('v')?.parse().ok()
}

impl Workdir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn versions(&self, stage: &str) -> Result<Vec<u32>> {
        let dir = self.root.join(stage);
        if !dir.exists() {
            return Ok(Vec::new());
        }
        let mut v: Vec<u32> = fs::read_dir(&dir)
            .with_context(|| format!("listing {}", dir.display()))?
            .filter_map(|e| e.ok())
            .filter_map(|e| parse_version(&e.file_name().to_string_lossy()))
            .collect();
        v.sort_unstable();
        Ok(v)
    }

    /// Highest sealed version of `stage`. Unsealed (interrupted) versions
    /// are ignored.
    pub fn latest(&self, stage: &str) -> Result<Option<StageRun>> {
        for v in self.versions(stage)?.into_iter().rev() {
            let dir = self.root.join(stage).join(format!("v{v}"));
            if dir.join(MANIFEST).exists() {
                return self.open(&dir).map(Some);
            }
        }
        Ok(None)
    }

    pub fn open(&self, dir: &Path) -> Result<StageRun> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let manifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(StageRun {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    /// Opens a version named by its workdir-relative label.
    pub fn open_label(&self, label: &str) -> Result<StageRun> {
        self.open(&self.root.join(label))
    }

    /// Latest sealed version of `stage`, or a prerequisite failure telling
    /// the user which subcommand to run.
    pub fn require(&self, stage: &str) -> Result<StageRun> {
        self.latest(stage)?.ok_or_else(|| {
            CliError::Prerequisite(format!(
                "no {stage} artifacts in {}: run {stage} first",
                self.root.display()
            ))
            .into()
        })
    }

    /// Reserves the next version directory. Never reuses an existing one,
    /// sealed or not.
    pub fn begin(&self, stage: &str) -> Result<PendingRun> {
        let version = self.versions(stage)?.last().map_or(1, |v| v + 1);
        let dir = self.root.join(stage).join(format!("v{version}"));
        fs::create_dir_all(dir.parent().expect("stage dir"))
            .with_context(|| format!("creating {}", self.root.display()))?;
        fs::create_dir(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(PendingRun {
            stage: stage.to_string(),
            version,
            dir,
            root: self.root.clone(),
            volatile: Vec::new(),
            inputs: Vec::new(),
            upstream: BTreeMap::new(),
        })
    }

    /// Manifest form of a path: workdir-relative when inside it.
    pub fn display_path(&self, path: &Path) -> String {
        let rel = path.strip_prefix(&self.root).unwrap_or(path);
        rel.to_string_lossy().replace('\\', "/")
    }
}

pub struct PendingRun {
    pub stage: String,
    pub version: u32,
    pub dir: PathBuf,
    root: PathBuf,
    volatile: Vec<String>,
    inputs: Vec<FileEntry>,
    upstream: BTreeMap<String, String>,
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

impl PendingRun {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn label(&self) -> String {
        format!("{}/v{}", self.stage, self.version)
    }

    /// Marks an output whose bytes legitimately vary between runs.
    pub fn volatile(&mut self, name: &str) {
        self.volatile.push(name.to_string());
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let wd = Workdir::new(self.root.clone());
        self.inputs.push(FileEntry {
            path: wd.display_path(path),
            sha256: Some(hash_file(path)?),
        });
        Ok(())
    }

    pub fn upstream(&mut self, run: &StageRun) {
        self.upstream.insert(run.manifest.stage.clone(), run.label());
    }

    /// Hashes every file in the version directory and writes the manifest.
    pub fn seal(self, seed: u64, config_hash: &str, params: serde_json::Value) -> Result<StageRun> {
        let mut names: Vec<String> = fs::read_dir(&self.dir)
            .with_context(|| format!("listing {}", self.dir.display()))?
            .filter_map(|e| e.ok())
            .filter(|e| e.file_type().is_ok_and(|t| t.is_file()))
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| n != MANIFEST)
            .collect();
        names.sort();
        let mut outputs = Vec::with_capacity(names.len());
        for n in names {
            let sha256 = if self.volatile.contains(&n) {
                None
            } else {
                Some(hash_file(&self.dir.join(&n))?)
            };
            outputs.push(FileEntry {
                path: format!("{}/{n}", self.label()),
                sha256,
            });
        }
        let manifest = Manifest {
            stage: self.stage.clone(),
            version: self.version,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_hash: config_hash.to_string(),
            params,
            upstream: self.upstream,
            inputs: self.inputs,
            outputs,
        };
        let path = self.dir.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(StageRun { dir: self.dir, manifest })
    }
}
