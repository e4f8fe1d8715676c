use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A cluster that cannot supply the requested number of members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shortfall {
    pub cluster: usize,
    pub available: usize,
    pub required: usize,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Stream(#[from] io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("non-finite activation in GCN layer {layer}")]
    NonFinite { layer: usize },
    #[error("training diverged at epoch {epoch}, batch {batch} (loss = {loss})")]
    Divergence { epoch: usize, batch: usize, loss: f64 },
    #[error("not a {0}")]
    BadMagic(&'static str),
    #[error("unsupported {kind} version {found}")]
    Version { kind: &'static str, found: u16 },
    #[error("checksum mismatch (stored {stored:08x}, computed {computed:08x})")]
    Checksum { stored: u32, computed: u32 },
    #[error("corrupt file: {0}")]
    Corrupt(String),
    #[error("k = {k} exceeds the number of distinct points ({distinct})")]
    TooFewPoints { k: usize, distinct: usize },
    #[error("clusters too small: {}", format_shortfalls(.0))]
    Shortfall(Vec<Shortfall>),
    #[error("silhouette undefined: {0}")]
    Silhouette(String),
    #[error("run covers {covered}/{total} samples (threshold {threshold}); missing: {}", .missing.join(", "))]
    Coverage {
        covered: usize,
        total: usize,
        threshold: f64,
        missing: Vec<String>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn format_shortfalls(s: &[Shortfall]) -> String {
    s.iter()
        .map(|s| {
            format!(
                "cluster {} has {} of {} required",
                s.cluster, s.available, s.required
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}
