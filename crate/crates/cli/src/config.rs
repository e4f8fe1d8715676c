//! Pipeline configuration: built-in defaults, then a TOML file, then flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stylecluster::corpus::synth::SynthConfig;
use stylecluster::evalmetrics::Selector;
use stylecluster::gcnnet::TrainConfig;
use stylecluster::styleinfo::DEFAULT_TOP_K;
use stylecluster::text::Tokenizer;
use stylecluster::util::sha256_hex;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    pub seed: u64,
    /// Parsed corpus; when unset, stages fall back to the latest `synth` output.
    pub corpus: Option<PathBuf>,
    pub workdir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub synth: SynthConfig,
    pub graphs: GraphsConfig,
    pub train: TrainConfig,
    pub cluster: ClusterConfig,
    pub motifs: MotifsConfig,
    pub metrics: MetricsConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            corpus: None,
            workdir: None,
            threads: None,
            synth: SynthConfig::default(),
            graphs: GraphsConfig::default(),
            train: TrainConfig::default(),
            cluster: ClusterConfig::default(),
            motifs: MotifsConfig::default(),
            metrics: MetricsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphsConfig {
    pub directed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub k: usize,
    pub n_init: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Members per cluster split; defaults to the smallest cluster size.
    pub split_size: Option<usize>,
    /// Size of each baseline split; defaults to `split_size * k`.
    pub baseline_total: Option<usize>,
    pub silhouette_cap: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k: 4,
            n_init: 10,
            max_iter: 300,
            tol: 1e-4,
            split_size: None,
            baseline_total: None,
            silhouette_cap: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotifsConfig {
    pub top_k: usize,
}

impl Default for MotifsConfig {
    fn default() -> Self {
        Self { top_k: DEFAULT_TOP_K }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub tokenizer: Tokenizer,
    pub min_coverage: f64,
    pub selector: Selector,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            tokenizer: Tokenizer::default(),
            min_coverage: 1.0,
            selector: Selector::default(),
        }
    }
}

impl PipelineConfig {
    /// Parses a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.corpus, &mut cfg.workdir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            ));
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.synth.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.train.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let c = &self.cluster;
        if c.k < 1 || c.n_init < 1 || c.max_iter < 1 {
            return bad("cluster.k, cluster.n_init and cluster.max_iter must be at least 1".into());
        }
        if !(c.tol >= 0.0) {
            return bad(format!("cluster.tol must be non-negative, got {}", c.tol));
        }
        if c.split_size == Some(0) || c.baseline_total == Some(0) {
            return bad("split sizes must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.metrics.min_coverage) {
            return bad(format!("metrics.min_coverage must be in [0, 1], got {}", self.metrics.min_coverage));
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }

    /// Hash of every setting that can change an artifact. Paths, the thread
    /// count and the seed (recorded separately) are excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.corpus = None;
        c.workdir = None;
        c.threads = None;
        c.seed = 0;
        sha256_hex(&serde_json::to_vec(&c).expect("config serializes"))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::parse(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(cfg.train.dim, 256);
        assert_eq!(cfg.train.batch_size, 2048);
        assert_eq!(cfg.train.margin, 0.5);
        assert_eq!(cfg.cluster.k, 4);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = PipelineConfig::parse("schema_version = 1\nseed = 7\n[train]\ndim = 16\n").unwrap();
        assert_eq!((cfg.seed, cfg.train.dim, cfg.train.epochs), (7, 16, 100));
        let sel = PipelineConfig::parse("[metrics]\nselector = \"gleu\"\n").unwrap();
        assert_eq!(sel.metrics.selector, Selector::Gleu);
        assert_eq!(PipelineConfig::parse("[metrics]\nselector = \"rouge1\"\n").unwrap().metrics.selector, Selector::Rouge1);
    }

    #[test]
    fn schema_violations() {
        assert!(PipelineConfig::parse("schema_version = 2").unwrap_err().contains("schema_version"));
        assert!(PipelineConfig::parse("colour = 1").is_err());
        assert!(PipelineConfig::parse("[train]\nlearning_rate = 1.0").is_err());
        assert!(PipelineConfig::parse("[cluster]\nk = \"four\"").is_err());
        let mut cfg = PipelineConfig::default();
        cfg.metrics.min_coverage = 1.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_ignores_paths_and_threads() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.workdir = Some("/tmp/x".into());
        b.threads = Some(3);
        assert_eq!(a.hash(), b.hash());
        b.train.dim = 8;
        assert_ne!(a.hash(), b.hash());
    }
}
