//! Forward pass against a straight-line dense reimplementation, plus the
//! structural properties of the encoder and checkpoint round trips.

use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stylecluster::gcnnet::{
    adam_step, backward_triplet, decode_checkpoint, encode_checkpoint, forward_graph, score_pair, sigmoid,
    triplet_loss, AdamState, GcnParams, TrainConfig,
};
use stylecluster::syngraph::SynGraph;

fn random_graph<R: Rng>(rng: &mut R, n: usize, vocab: u32, directed: bool) -> SynGraph {
    let node_labels = (0..n).map(|_| rng.random_range(0..vocab)).collect();
    let mut edges = Vec::new();
    for j in 1..n {
        edges.push((rng.random_range(0..j) as u32, j as u32));
    }
    for _ in 0..n / 3 {
        let (a, b) = (rng.random_range(0..n) as u32, rng.random_range(0..n) as u32);
        if a != b && !edges.contains(&(a, b)) && !edges.contains(&(b, a)) {
            edges.push((a, b));
        }
    }
    SynGraph {
        node_labels,
        edges,
        directed,
        n_words: n,
    }
}

/// Eq-by-eq dense evaluation with explicit loops.
fn oracle_pooled(p: &GcnParams, g: &SynGraph) -> Vec<f64> {
    let n = g.node_labels.len();
    let d = p.dim();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = 1.0;
    }
    for &(x, y) in &g.edges {
        a[x as usize][y as usize] = 1.0;
        if !g.directed {
            a[y as usize][x as usize] = 1.0;
        }
    }
    let deg: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let mut norm = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            norm[i][j] = if g.directed {
                a[i][j] / deg[i]
            } else {
                a[i][j] / (deg[i].sqrt() * deg[j].sqrt())
            };
        }
    }
    let mut h: Vec<Vec<f64>> = g
        .node_labels
        .iter()
        .map(|&l| p.embed.row(l as usize).to_vec())
        .collect();
    for w in &p.layers {
        let mut next = vec![vec![0.0; d]; n];
        for i in 0..n {
            for k in 0..d {
                let mut z = 0.0;
                for j in 0..n {
                    for m in 0..d {
                        z += norm[i][j] * h[j][m] * w[[m, k]];
                    }
                }
                next[i][k] = z.max(0.0);
            }
        }
        h = next;
    }
    (0..d).map(|k| h.iter().map(|r| r[k]).sum::<f64>() / n as f64).collect()
}

#[test]
fn forward_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for trial in 0..50 {
        let n = if trial == 0 { 6 } else { rng.random_range(1..=14) };
        let g = random_graph(&mut rng, n, 7, trial % 2 == 1);
        let p = GcnParams::init(7, 4, &mut rng);
        let t = forward_graph(&p, &g).unwrap();
        let o = oracle_pooled(&p, &g);
        for (a, b) in t.pooled.iter().zip(&o) {
            assert!((a - b).abs() < 1e-12, "trial {trial}: {a} vs {b}");
        }
    }
}

#[test]
fn zeroed_embeddings_score_as_bias() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut p = GcnParams::init(5, 6, &mut rng);
    p.embed *= 0.0;
    p.score_b = 0.3;
    let g = random_graph(&mut rng, 8, 5, false);
    let t = forward_graph(&p, &g).unwrap();
    assert!(t.pooled.iter().all(|&x| x == 0.0));
    assert_eq!(score_pair(&p, t.pooled.view(), t.pooled.view()), sigmoid(0.3));
}

#[test]
fn checkpoint_round_trip_preserves_forward() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = GcnParams::init(9, 5, &mut rng);
    let cfg = TrainConfig {
        dim: 5,
        ..TrainConfig::default()
    };
    let bytes = encode_checkpoint(&p, &cfg).unwrap();
    let (q, c) = decode_checkpoint(&bytes).unwrap();
    assert_eq!(encode_checkpoint(&q, &c).unwrap(), bytes);
    let g = random_graph(&mut rng, 10, 9, true);
    let a = forward_graph(&p, &g).unwrap().pooled;
    let b = forward_graph(&q, &g).unwrap().pooled;
    assert_eq!(a, b);
}

#[test]
fn adam_training_is_bitwise_reproducible() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut p = GcnParams::init(6, 4, &mut rng);
        let gs: Vec<SynGraph> = (0..3).map(|_| random_graph(&mut rng, 7, 6, false)).collect();
        let mut st = AdamState::with_hparams(&p, 1e-2, 0.9, 0.999, 1e-8);
        for _ in 0..20 {
            let [u, a, b] = [0, 1, 2].map(|i| forward_graph(&p, &gs[i]).unwrap());
            let step = backward_triplet(&p, &u, &a, &b, 0.5).unwrap();
            adam_step(&mut p, &step.grads, &mut st).unwrap();
        }
        p
    };
    let (a, b) = (run(), run());
    for (x, y) in a.tensors().iter().zip(b.tensors()) {
        assert!(x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}

#[test]
fn dead_units_pass_no_gradient() {
    // Negative embeddings through identity weights keep every pre-activation
    // below zero; with pos == neg the score terms cancel too.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut p = GcnParams::init(3, 3, &mut rng);
    p.embed.fill(-1.0);
    for w in &mut p.layers {
        *w = Array2::eye(3);
    }
    let g = random_graph(&mut rng, 5, 3, false);
    let t = forward_graph(&p, &g).unwrap();
    let step = backward_triplet(&p, &t, &t, &t, 0.5).unwrap();
    assert_eq!(step.loss, 0.5);
    assert_eq!(step.grads.embed.iter().fold(0.0f64, |m, x| m.max(x.abs())), 0.0);
    assert!(step.grads.layers.iter().all(|w| w.iter().all(|&x| x == 0.0)));
    assert_eq!(step.grads.max_abs(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pooling_is_permutation_invariant(seed in any::<u64>(), n in 1usize..12, directed in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, n, 6, directed);
        let p = GcnParams::init(6, 4, &mut rng);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let mut labels = vec![0; n];
        for (i, &to) in perm.iter().enumerate() {
            labels[to] = g.node_labels[i];
        }
        let h = SynGraph {
            node_labels: labels,
            edges: g.edges.iter().map(|&(a, b)| (perm[a as usize] as u32, perm[b as usize] as u32)).collect(),
            directed,
            n_words: n,
        };
        let a = forward_graph(&p, &g).unwrap().pooled;
        let b = forward_graph(&p, &h).unwrap().pooled;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_is_bounded(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = GcnParams::init(4, 3, &mut rng);
        let [u, a, b] = [0, 1, 2].map(|_| {
            let n = rng.random_range(1..8);
            forward_graph(&p, &random_graph(&mut rng, n, 4, false)).unwrap()
        });
        let l = triplet_loss(
            score_pair(&p, a.pooled.view(), u.pooled.view()),
            score_pair(&p, b.pooled.view(), u.pooled.view()),
            0.5,
        );
        prop_assert!((0.0..=1.5).contains(&l));
        prop_assert!(u.hidden.iter().all(|h| h.iter().all(|&x| x >= 0.0)));
    }
}
