//! LTRS training: rank the oracle sentence above a random article sentence
//! relative to the summary, then read off style embeddings.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{extract_triplet, sample_rng, DocumentSample, SkipReason, TripletOutcome};
use crate::error::{Error, Result};
use crate::gcnnet::{accumulate_triplet, adam_step, forward_graph, score_pair, AdamState, GcnParams, TrainConfig};
use crate::par;
use crate::syngraph::{build_syngraph, LabelVocab, SynGraph};
use crate::util::stable_u64;

mod embeddings;

pub use embeddings::{
    decode_embeddings, embed_corpus, encode_embeddings, read_embeddings, write_embeddings, write_embeddings_csv,
    StyleEmbedding,
};

/// Gradient accumulation granularity inside a batch. Fixed so the summation
/// order, and hence every bit of the result, is independent of thread count.
const CHUNK: usize = 32;
/// Salt for the validation split; independent of the training seed so the
/// split never moves between runs.
const SPLIT_SALT: u64 = 0x7661_6c69_6461_7465;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletGraphs {
    pub sample_id: String,
    pub user: SynGraph,
    pub pos: SynGraph,
    pub neg: SynGraph,
}

#[derive(Debug, Clone, Default)]
pub struct TripletSet {
    pub triplets: Vec<TripletGraphs>,
    pub skipped: Vec<(String, SkipReason)>,
}

/// Extracts one triplet per sample and converts it to graphs. Output keeps
/// corpus order.
pub fn build_triplet_graphs(
    samples: &[DocumentSample],
    corpus_seed: u64,
    directed: bool,
    vocab: &LabelVocab,
) -> TripletSet {
    let outcomes = par::map(samples, |s| {
        let mut rng = sample_rng(corpus_seed, &s.id);
        match extract_triplet(s, &mut rng) {
            TripletOutcome::Triplet(t) => Ok(TripletGraphs {
                sample_id: t.sample_id,
                user: build_syngraph(&t.user, directed, vocab),
                pos: build_syngraph(&s.article[t.oracle_idx], directed, vocab),
                neg: build_syngraph(&s.article[t.negative_idx], directed, vocab),
            }),
            TripletOutcome::Skip(r) => Err((s.id.clone(), r)),
        }
    });
    let mut set = TripletSet::default();
    for o in outcomes {
        match o {
            Ok(t) => set.triplets.push(t),
            Err(skip) => set.skipped.push(skip),
        }
    }
    set
}

/// Deterministic hold-out membership by id hash.
pub fn is_validation(sample_id: &str, fraction: f64) -> bool {
    let u = (stable_u64(SPLIT_SALT, sample_id) >> 11) as f64 / (1u64 << 53) as f64;
    u < fraction
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Ranking accuracy on training triplets, scored before each batch's update.
    pub train_accuracy: f64,
    pub val_accuracy: Option<f64>,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    /// Epoch whose parameters were returned; `None` for the initial ones.
    pub best_epoch: Option<usize>,
    pub n_train: usize,
    pub n_val: usize,
}

impl TrainLog {
    /// The log minus wall-clock fields, for reproducibility comparisons.
    pub fn metrics(&self) -> Vec<(usize, f64, f64, Option<f64>)> {
        self.epochs
            .iter()
            .map(|e| (e.epoch, e.mean_loss, e.train_accuracy, e.val_accuracy))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: GcnParams,
    pub log: TrainLog,
}

/// Fraction of triplets with `s(pos, user) > s(neg, user)`; ties fail.
/// Empty input gives 0.
pub fn ranking_accuracy(p: &GcnParams, data: &[TripletGraphs]) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let wins = par::try_map(data, |t| -> Result<bool> {
        let u = forward_graph(p, &t.user)?;
        let a = forward_graph(p, &t.pos)?;
        let b = forward_graph(p, &t.neg)?;
        Ok(score_pair(p, a.pooled.view(), u.pooled.view()) > score_pair(p, b.pooled.view(), u.pooled.view()))
    })?;
    Ok(wins.iter().filter(|&&w| w).count() as f64 / data.len() as f64)
}

struct ChunkSum {
    grads: GcnParams,
    loss: f64,
    correct: usize,
}

fn chunk_gradient(p: &GcnParams, chunk: &[&TripletGraphs], margin: f64) -> Result<ChunkSum> {
    let mut grads = p.zeros_like();
    let (mut loss, mut correct) = (0.0, 0);
    for t in chunk {
        let u = forward_graph(p, &t.user)?;
        let a = forward_graph(p, &t.pos)?;
        let b = forward_graph(p, &t.neg)?;
        let (l, sp, sn) = accumulate_triplet(p, &u, &a, &b, margin, &mut grads)?;
        loss += l;
        correct += usize::from(sp > sn);
    }
    Ok(ChunkSum { grads, loss, correct })
}

/// Trains from seeded initial parameters. Zero epochs returns them as is.
pub fn train(data: &[TripletGraphs], vocab_size: usize, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let params = GcnParams::init(vocab_size, cfg.dim, &mut rng);
    train_from(params, data, cfg)
}

/// Mini-batch Adam on mean triplet loss with early stopping on validation
/// ranking accuracy. Returns the best-validation parameters (the last ones
/// when nothing is held out).
pub fn train_from(mut params: GcnParams, data: &[TripletGraphs], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if params.dim() != cfg.dim {
        return Err(Error::DimMismatch {
            expected: cfg.dim,
            found: params.dim(),
        });
    }
    let (val, train_set): (Vec<&TripletGraphs>, Vec<&TripletGraphs>) =
        data.iter().partition(|t| is_validation(&t.sample_id, cfg.val_fraction));
    if train_set.is_empty() {
        return Err(Error::InvalidConfig("validation split left no training triplets".into()));
    }
    let val: Vec<TripletGraphs> = val.into_iter().cloned().collect();
    let mut log = TrainLog {
        n_train: train_set.len(),
        n_val: val.len(),
        ..TrainLog::default()
    };
    tracing::info!(train = log.n_train, val = log.n_val, dim = cfg.dim, "training");

    let mut adam = AdamState::new(&params, cfg);
    let mut best: Option<(f64, GcnParams)> = None;
    let mut stale = 0;
    let mut order = train_set;
    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(epoch as u64)));
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for (bi, batch) in order.chunks(cfg.batch_size).enumerate() {
            let chunks: Vec<&[&TripletGraphs]> = batch.chunks(CHUNK).collect();
            let sums = par::try_map(&chunks, |c| chunk_gradient(&params, c, cfg.margin))?;
            let mut grads = params.zeros_like();
            let mut batch_loss = 0.0;
            for s in &sums {
                grads.add_assign(&s.grads);
                batch_loss += s.loss;
                correct += s.correct;
            }
            if !batch_loss.is_finite() || !grads.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: bi,
                    loss: batch_loss / batch.len() as f64,
                });
            }
            grads.scale(1.0 / batch.len() as f64);
            adam_step(&mut params, &grads, &mut adam)?;
            loss_sum += batch_loss;
        }
        let val_accuracy = if val.is_empty() {
            None
        } else {
            Some(ranking_accuracy(&params, &val)?)
        };
        let entry = EpochLog {
            epoch,
            mean_loss: loss_sum / order.len() as f64,
            train_accuracy: correct as f64 / order.len() as f64,
            val_accuracy,
            wall_ms: started.elapsed().as_millis() as u64,
        };
        tracing::info!(
            epoch,
            loss = entry.mean_loss,
            train_acc = entry.train_accuracy,
            val_acc = ?entry.val_accuracy,
            ms = entry.wall_ms,
            "epoch"
        );
        log.epochs.push(entry);

        match val_accuracy {
            None => log.best_epoch = Some(epoch),
            Some(acc) => {
                if best.as_ref().is_none_or(|(b, _)| acc > *b) {
                    best = Some((acc, params.clone()));
                    log.best_epoch = Some(epoch);
                    stale = 0;
                } else {
                    stale += 1;
                    if stale >= cfg.patience {
                        break;
                    }
                }
            }
        }
    }
    if let Some((_, p)) = best {
        params = p;
    }
    Ok(TrainOutcome { params, log })
}
