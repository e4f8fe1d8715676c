//! `stylecluster` command-line pipeline.
//!
//! Every subcommand reads the latest sealed artifacts of the stages it
//! depends on and writes a new version directory under the workdir. Exit
//! codes: 0 success, 1 invalid input or missing prerequisite, 2 internal
//! failure.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use stylecluster::Error as CoreError;

pub mod commands;
pub mod config;
pub mod workdir;

pub use config::PipelineConfig;
pub use workdir::{Manifest, Workdir};

/// Failures attributable to the user's input rather than to the tool.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Prerequisite(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Validation(String),
}

pub const DEFAULT_WORKDIR: &str = "stylecluster-work";

#[derive(Debug, Parser)]
#[command(name = "stylecluster", version, about = "Subjective-style clustering for summarization corpora")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML config (schema_version = 1); flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, env = "STYLECLUSTER_WORKDIR")]
    pub workdir: Option<PathBuf>,
    /// More logging; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a parsed corpus and report rejected records.
    Validate(commands::CorpusArg),
    /// Generate a planted-style synthetic corpus.
    Synth(commands::SynthArgs),
    /// Extract style triplets and build their SynGraphs.
    Graphs(commands::CorpusArg),
    /// Train the GCN on the triplet ranking task.
    Train(commands::TrainArgs),
    /// Compute style embeddings with the trained model.
    Embed(commands::CorpusArg),
    /// Cluster style embeddings, or assign new ones to existing centroids.
    Cluster(commands::ClusterArgs),
    /// Write per-cluster and baseline training splits.
    Split(commands::SplitArgs),
    /// Per-cluster motif census of summary and oracle graphs.
    Motifs(commands::MotifsArgs),
    /// Summary-oracle alignment graphs and compression statistics.
    Sograph(commands::SographArgs),
    /// Score generated summaries; optionally build the per-sample best ensemble.
    Eval(commands::EvalArgs),
    /// Collect the latest results of every stage into one document.
    Report,
}

/// Resolved settings shared by all subcommands.
pub struct Context {
    pub config: PipelineConfig,
    pub workdir: Workdir,
}

impl Context {
    pub fn new(global: &GlobalArgs) -> Result<Self, CliError> {
        let mut config = match &global.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = global.seed {
            config.seed = s;
        }
        if let Some(t) = global.threads {
            config.threads = Some(t);
        }
        if let Some(w) = &global.workdir {
            config.workdir = Some(w.clone());
        }
        config.train.seed = config.seed;
        config.validate()?;
        let root = config.workdir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_WORKDIR));
        Ok(Self {
            config,
            workdir: Workdir::new(root),
        })
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let ctx = Context::new(&cli.global)?;
    if let Some(t) = ctx.config.threads {
        stylecluster::par::init_threads(t);
    }
    commands::dispatch(&ctx, cli.command)
}

/// Exit status for a failed run.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<CliError>().is_some() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                CoreError::Io { .. }
                | CoreError::Stream(_)
                | CoreError::Json(_)
                | CoreError::Csv(_)
                | CoreError::Shape(_)
                | CoreError::NonFinite { .. }
                | CoreError::Divergence { .. } => 2,
                _ => 1,
            };
        }
    }
    2
}
