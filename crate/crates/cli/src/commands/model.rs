use std::fs;

use anyhow::{Context as _, Result};
use serde::Serialize;
use serde_json::json;
use stylecluster::gcnnet::{load_checkpoint, save_checkpoint};
use stylecluster::ltrs::{self, build_triplet_graphs, embed_corpus, write_embeddings, write_embeddings_csv, TripletGraphs};
use stylecluster::syngraph::LabelVocab;
use tracing::info;

use super::{create, load_corpus, read_json, read_jsonl, resolve_corpus, write_json, CorpusArg, TrainArgs};
use crate::workdir::StageRun;
use crate::{CliError, Context};

pub(crate) fn upstream(ctx: &Context, run: &StageRun, stage: &str) -> Result<StageRun> {
    let label = run.manifest.upstream.get(stage).ok_or_else(|| {
        CliError::Prerequisite(format!("{} does not record its {stage} input", run.label()))
    })?;
    ctx.workdir.open_label(label)
}

pub(crate) fn load_graphs(run: &StageRun) -> Result<(LabelVocab, Vec<TripletGraphs>)> {
    let vocab: LabelVocab = read_json(&run.path("vocab.json"))?;
    let triplets = read_jsonl(&run.path("triplets.jsonl"))?;
    Ok((vocab, triplets))
}

#[derive(Serialize)]
struct TrainReport {
    n_train: usize,
    n_val: usize,
    epochs_run: usize,
    best_epoch: Option<usize>,
    best_val_accuracy: Option<f64>,
    final_train_accuracy: Option<f64>,
    parameters: usize,
}

pub fn train(ctx: &Context, args: &TrainArgs) -> Result<()> {
    let graphs = ctx.workdir.require("graphs")?;
    let (vocab, triplets) = load_graphs(&graphs)?;
    let mut cfg = ctx.config.train.clone();
    if let Some(e) = args.epochs {
        cfg.epochs = e;
    }
    if let Some(d) = args.dim {
        cfg.dim = d;
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    info!(triplets = triplets.len(), dim = cfg.dim, epochs = cfg.epochs, "training");
    let out = ltrs::train(&triplets, vocab.len(), &cfg)?;

    let mut run = ctx.workdir.begin("train")?;
    run.upstream(&graphs);
    save_checkpoint(&run.path("model.ssg1"), &out.params, &cfg)?;
    write_json(&run.path("train_log.json"), &out.log)?;
    run.volatile("train_log.json");
    let best = out.log.best_epoch.and_then(|b| out.log.epochs.iter().find(|e| e.epoch == b));
    let report = TrainReport {
        n_train: out.log.n_train,
        n_val: out.log.n_val,
        epochs_run: out.log.epochs.len(),
        best_epoch: out.log.best_epoch,
        best_val_accuracy: best.and_then(|e| e.val_accuracy),
        final_train_accuracy: out.log.epochs.last().map(|e| e.train_accuracy),
        parameters: out.params.n_parameters(),
    };
    write_json(&run.path("report.json"), &report)?;
    let label = run.label();
    run.seal(ctx.seed(), &ctx.config.hash(), json!({ "train": cfg }))?;
    println!(
        "{label}: {} epochs, best epoch {:?}, validation accuracy {:?}",
        report.epochs_run, report.best_epoch, report.best_val_accuracy
    );
    Ok(())
}

pub fn embed(ctx: &Context, args: &CorpusArg) -> Result<()> {
    let train = ctx.workdir.require("train")?;
    let graphs = upstream(ctx, &train, "graphs")?;
    let (vocab, mut triplets) = load_graphs(&graphs)?;
    let (params, _) = load_checkpoint(&train.path("model.ssg1"))?;

    let mut run = ctx.workdir.begin("embed")?;
    run.upstream(&train);
    run.upstream(&graphs);
    if args.corpus.is_some() {
        // A different corpus, e.g. held-out samples for nearest-centroid
        // assignment, graphed with the training vocabulary.
        let src = resolve_corpus(ctx, args)?;
        let samples = load_corpus(&src.path)?;
        src.record(&mut run)?;
        let directed = triplets.first().is_some_and(|t| t.user.directed);
        triplets = build_triplet_graphs(&samples, ctx.seed(), directed, &vocab).triplets;
    } else if graphs.path("labels.csv").is_file() {
        fs::copy(graphs.path("labels.csv"), run.path("labels.csv")).context("copying labels")?;
    }
    let embs = embed_corpus(&params, &triplets)?;
    write_embeddings(&run.path("embeddings.sse1"), &embs)?;
    write_embeddings_csv(create(&run.path("embeddings.csv"))?, &embs)?;
    let label = run.label();
    run.seal(ctx.seed(), &ctx.config.hash(), json!({}))?;
    println!("{label}: {} embeddings of dimension {}", embs.len(), 2 * params.dim());
    Ok(())
}
