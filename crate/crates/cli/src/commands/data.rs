use std::fs;

use anyhow::{Context as _, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use stylecluster::corpus::synth::{generate_synthetic_corpus, write_labels_csv};
use stylecluster::corpus::{load_parsed_corpus, write_parsed_corpus};
use stylecluster::ltrs::build_triplet_graphs;
use stylecluster::syngraph::LabelVocab;
use tracing::info;

use super::{create, load_corpus, resolve_corpus, write_json, write_jsonl, CorpusArg, SynthArgs};
use crate::{CliError, Context};

#[derive(Serialize)]
struct RejectRow {
    line: usize,
    id: Option<String>,
    reason: String,
}

#[derive(Serialize)]
struct ValidateReport {
    accepted: usize,
    rejected: usize,
    rejects: Vec<RejectRow>,
}

pub fn validate(ctx: &Context, args: &CorpusArg) -> Result<()> {
    let src = resolve_corpus(ctx, args)?;
    let (_, report) = load_parsed_corpus(&src.path).with_context(|| format!("reading {}", src.path.display()))?;
    let mut run = ctx.workdir.begin("validate")?;
    src.record(&mut run)?;
    let out = ValidateReport {
        accepted: report.accepted,
        rejected: report.rejects.len(),
        rejects: report
            .rejects
            .iter()
            .map(|r| RejectRow {
                line: r.line,
                id: r.id.clone(),
                reason: r.reason.clone(),
            })
            .collect(),
    };
    write_json(&run.path("report.json"), &out)?;
    let label = run.label();
    run.seal(ctx.seed(), &ctx.config.hash(), json!({}))?;
    println!("{}: {}", src.path.display(), report.summary());
    for r in report.rejects.iter().take(20) {
        println!("  line {}{}: {}", r.line, r.id.as_ref().map(|i| format!(" ({i})")).unwrap_or_default(), r.reason);
    }
    info!(output = %label, "validation report written");
    if report.rejects.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{} record(s) rejected", report.rejects.len())).into())
    }
}

pub fn synth(ctx: &Context, args: &SynthArgs) -> Result<()> {
    let mut cfg = ctx.config.synth.clone();
    if let Some(n) = args.samples {
        cfg.samples = n;
    }
    if let Some(s) = args.styles {
        cfg.styles = s;
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let corpus = generate_synthetic_corpus(&cfg, &mut ChaCha8Rng::seed_from_u64(ctx.seed()))?;
    let run = ctx.workdir.begin("synth")?;
    write_parsed_corpus(create(&run.path("corpus.jsonl"))?, &corpus.samples)?;
    write_labels_csv(create(&run.path("labels.csv"))?, &corpus)?;
    let label = run.label();
    run.seal(ctx.seed(), &ctx.config.hash(), json!({ "synth": cfg }))?;
    println!("{label}: {} samples, {} styles", cfg.samples, cfg.styles);
    Ok(())
}

#[derive(Serialize)]
struct GraphsReport {
    samples: usize,
    triplets: usize,
    skipped: usize,
    vocab_size: usize,
    directed: bool,
}

pub fn graphs(ctx: &Context, args: &CorpusArg) -> Result<()> {
    let src = resolve_corpus(ctx, args)?;
    let samples = load_corpus(&src.path)?;
    let vocab = LabelVocab::build(samples.iter().flat_map(|s| s.article.iter().chain(&s.summary)))?;
    let directed = ctx.config.graphs.directed;
    let set = build_triplet_graphs(&samples, ctx.seed(), directed, &vocab);
    if set.triplets.is_empty() {
        return Err(CliError::Validation("no sample yields a style triplet".into()).into());
    }

    let mut run = ctx.workdir.begin("graphs")?;
    src.record(&mut run)?;
    write_json(&run.path("vocab.json"), &vocab)?;
    write_jsonl(&run.path("triplets.jsonl"), &set.triplets)?;
    let mut w = csv::Writer::from_writer(create(&run.path("skipped.csv"))?);
    w.write_record(["sample_id", "reason"])?;
    for (id, reason) in &set.skipped {
        w.write_record([id.as_str(), reason.to_string().as_str()])?;
    }
    w.flush()?;
    if let Some(labels) = &src.labels {
        run.input(labels)?;
        fs::copy(labels, run.path("labels.csv")).context("copying labels")?;
    }
    let report = GraphsReport {
        samples: samples.len(),
        triplets: set.triplets.len(),
        skipped: set.skipped.len(),
        vocab_size: vocab.len(),
        directed,
    };
    write_json(&run.path("report.json"), &report)?;
    let label = run.label();
    run.seal(ctx.seed(), &ctx.config.hash(), json!({ "graphs": ctx.config.graphs }))?;
    println!(
        "{label}: {} triplets from {} samples ({} skipped), vocabulary {}",
        report.triplets, report.samples, report.skipped, report.vocab_size
    );
    Ok(())
}
