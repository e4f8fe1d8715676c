//! Parallel versus single-threaded throughput of the data-parallel kernels.
//!
//! With the default `parallel` feature each kernel runs once inside a
//! one-thread rayon pool and once inside a pool of all cores. Build with
//! `--no-default-features` to measure the plain sequential fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stylecluster::clusterer::{best_of_restarts, to_matrix, KMeansConfig};
use stylecluster::corpus::synth::{generate_synthetic_corpus, SynthConfig};
use stylecluster::gcnnet::GcnParams;
use stylecluster::ltrs::{build_triplet_graphs, embed_corpus, ranking_accuracy, TripletGraphs};
use stylecluster::syngraph::LabelVocab;

struct Fixture {
    triplets: Vec<TripletGraphs>,
    params: GcnParams,
    points: ndarray::Array2<f64>,
}

fn fixture() -> Fixture {
    let cfg = SynthConfig {
        samples: 512,
        ..SynthConfig::default()
    };
    let corpus = generate_synthetic_corpus(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let vocab = LabelVocab::build(corpus.samples.iter().flat_map(|s| s.article.iter().chain(&s.summary))).unwrap();
    let triplets = build_triplet_graphs(&corpus.samples, 1, false, &vocab).triplets;
    let params = GcnParams::init(vocab.len(), 64, &mut ChaCha8Rng::seed_from_u64(2));
    let embs = embed_corpus(&params, &triplets).unwrap();
    let rows: Vec<&[f64]> = embs.iter().map(|e| e.vector.as_slice()).collect();
    let points = to_matrix(&rows).unwrap();
    Fixture {
        triplets,
        params,
        points,
    }
}

#[cfg(feature = "parallel")]
fn modes() -> Vec<(String, rayon::ThreadPool)> {
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    vec![
        ("1-thread".to_string(), one),
        (format!("{}-threads", all.current_num_threads()), all),
    ]
}

#[cfg(feature = "parallel")]
fn run_in<R: Send>(mode: &(String, rayon::ThreadPool), f: impl FnOnce() -> R + Send) -> R {
    mode.1.install(f)
}

#[cfg(not(feature = "parallel"))]
fn modes() -> Vec<(String, ())> {
    vec![("sequential".to_string(), ())]
}

#[cfg(not(feature = "parallel"))]
fn run_in<R>(_: &(String, ()), f: impl FnOnce() -> R) -> R {
    f()
}

fn kernels(c: &mut Criterion) {
    let fx = fixture();
    let kmeans = KMeansConfig {
        k: 4,
        n_init: 2,
        ..KMeansConfig::default()
    };
    let mut g = c.benchmark_group("throughput");
    g.sample_size(10);
    for mode in modes() {
        g.bench_function(BenchmarkId::new("forward_ranking", &mode.0), |b| {
            b.iter(|| run_in(&mode, || ranking_accuracy(&fx.params, &fx.triplets).unwrap()))
        });
        g.bench_function(BenchmarkId::new("embed_corpus", &mode.0), |b| {
            b.iter(|| run_in(&mode, || embed_corpus(&fx.params, &fx.triplets).unwrap()))
        });
        g.bench_function(BenchmarkId::new("kmeans", &mode.0), |b| {
            b.iter(|| run_in(&mode, || best_of_restarts(fx.points.view(), &kmeans).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
