mod analysis;
mod cluster;
mod data;
mod model;

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use clap::Args;
use serde::de::DeserializeOwned;
use serde::Serialize;
use stylecluster::clusterer::Assignment;
use stylecluster::corpus::{load_parsed_corpus, DocumentSample};
use stylecluster::Error as CoreError;
use tracing::warn;

use crate::workdir::{PendingRun, StageRun};
use crate::{CliError, Command, Context};

#[derive(Debug, Clone, Default, Args)]
pub struct CorpusArg {
    /// Parsed corpus (default: config `corpus`, else the latest synth output).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub styles: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub k: Option<usize>,
    /// Assign the embeddings in this file (or embed version directory) to
    /// the latest centroids instead of clustering.
    #[arg(long, value_name = "PATH")]
    pub assign: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    /// Members per cluster split.
    #[arg(long)]
    pub size: Option<usize>,
    /// Size of each baseline split.
    #[arg(long)]
    pub baseline_total: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct MotifsArgs {
    #[arg(long)]
    pub top_k: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SographArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    /// Sample to draw (repeatable). Default: the member nearest each centroid,
    /// or the first sample when nothing is clustered yet.
    #[arg(long = "id")]
    pub ids: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    /// Generated-run file, one `{"id", "sentences"}` record per line
    /// (repeatable). The system name is the file stem.
    #[arg(long = "run", value_name = "FILE")]
    pub runs: Vec<PathBuf>,
    /// Also score the gold summaries against themselves.
    #[arg(long)]
    pub gold: bool,
    /// Build the per-sample best ensemble over all runs.
    #[arg(long)]
    pub best: bool,
    /// Selection metric for --best: r1, r2, rl or gleu.
    #[arg(long)]
    pub selector: Option<String>,
    /// Only evaluate the ids listed in this file (one per line).
    #[arg(long, value_name = "FILE")]
    pub ids: Option<PathBuf>,
    #[arg(long)]
    pub per_sample: bool,
}

pub fn dispatch(ctx: &Context, cmd: Command) -> Result<()> {
    match cmd {
        Command::Validate(a) => data::validate(ctx, &a),
        Command::Synth(a) => data::synth(ctx, &a),
        Command::Graphs(a) => data::graphs(ctx, &a),
        Command::Train(a) => model::train(ctx, &a),
        Command::Embed(a) => model::embed(ctx, &a),
        Command::Cluster(a) => match &a.assign {
            Some(p) => cluster::assign(ctx, p),
            None => cluster::cluster(ctx, &a),
        },
        Command::Split(a) => cluster::split(ctx, &a),
        Command::Motifs(a) => analysis::motifs(ctx, &a),
        Command::Sograph(a) => analysis::sograph(ctx, &a),
        Command::Eval(a) => analysis::eval(ctx, &a),
        Command::Report => analysis::report(ctx),
    }
}

pub(crate) struct CorpusSource {
    pub path: PathBuf,
    /// Planted style labels, when the corpus is synthetic.
    pub labels: Option<PathBuf>,
    pub synth: Option<StageRun>,
}

impl CorpusSource {
    /// Records the corpus as an input of `run`.
    pub fn record(&self, run: &mut PendingRun) -> Result<()> {
        if let Some(s) = &self.synth {
            run.upstream(s);
        }
        run.input(&self.path)
    }
}

pub(crate) fn resolve_corpus(ctx: &Context, flag: &CorpusArg) -> Result<CorpusSource> {
    if let Some(p) = flag.corpus.as_ref().or(ctx.config.corpus.as_ref()) {
        if !p.is_file() {
            return Err(CliError::Config(format!("corpus {} does not exist", p.display())).into());
        }
        return Ok(CorpusSource {
            path: p.clone(),
            labels: None,
            synth: None,
        });
    }
    match ctx.workdir.latest("synth")? {
        Some(run) => Ok(CorpusSource {
            path: run.path("corpus.jsonl"),
            labels: Some(run.path("labels.csv")).filter(|p| p.is_file()),
            synth: Some(run),
        }),
        None => Err(CliError::Prerequisite(
            "no corpus: pass --corpus, set `corpus` in the config, or run synth first".into(),
        )
        .into()),
    }
}

/// Loads a corpus, skipping rejected records with a warning.
pub(crate) fn load_corpus(path: &Path) -> Result<Vec<DocumentSample>> {
    let (samples, report) =
        load_parsed_corpus(path).with_context(|| format!("loading corpus {}", path.display()))?;
    if !report.rejects.is_empty() {
        warn!(rejected = report.rejects.len(), "skipping rejected records; run validate for details");
    }
    if samples.is_empty() {
        return Err(CoreError::EmptyCorpus.into());
    }
    Ok(samples)
}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
        }
    }
    Ok(out)
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

/// Reads `sample_id,cluster,distance` rows back into assignments.
pub(crate) fn read_clusters(path: &Path) -> Result<(Vec<String>, Vec<Assignment>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let (mut ids, mut assignments) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        let bad = || CoreError::Corrupt(format!("{}: malformed row", path.display()));
        let cluster: usize = rec.get(1).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let dist: f64 = rec.get(2).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        ids.push(rec[0].to_string());
        assignments.push(Assignment {
            cluster,
            sq_dist: dist * dist,
        });
    }
    Ok((ids, assignments))
}

pub(crate) fn read_id_list(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}
