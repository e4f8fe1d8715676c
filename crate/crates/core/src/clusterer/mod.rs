//! k-means++ clustering of style embeddings, nearest-centroid assignment,
//! and the cluster/baseline dataset splits.
//!
//! Points are rows of an `n × dim` matrix. All distances are squared
//! Euclidean except where a function says otherwise.

use std::collections::HashSet;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

mod analysis;
mod io;
mod splits;

pub use analysis::{adjusted_rand_index, project_2d, silhouette};
pub use io::{
    decode_centroids, encode_centroids, read_centroids, write_clusters_csv, write_projection_csv, write_split,
    ClusterReport,
};
pub use splits::{baseline_quotas, equal_quotas, make_baselines, make_cluster_splits, SplitSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub k: usize,
    pub n_init: usize,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this (Euclidean).
    pub tol: f64,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 4,
            n_init: 10,
            max_iter: 300,
            tol: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub cluster: usize,
    pub sq_dist: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentroidModel {
    pub centroids: Array2<f64>,
    /// Parallel to the input points.
    pub assignments: Vec<Assignment>,
    /// Sum of the stored squared distances.
    pub inertia: f64,
    /// Inertia after every assignment step, first to last.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

impl CentroidModel {
    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn dim(&self) -> usize {
        self.centroids.ncols()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for a in &self.assignments {
            sizes[a.cluster] += 1;
        }
        sizes
    }
}

pub fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid by squared distance; ties go to the lowest index.
fn nearest(centroids: ArrayView2<f64>, x: ArrayView1<f64>) -> Assignment {
    let mut best = Assignment {
        cluster: 0,
        sq_dist: f64::INFINITY,
    };
    for (c, row) in centroids.rows().into_iter().enumerate() {
        let d = sq_dist(row, x);
        if d < best.sq_dist {
            best = Assignment { cluster: c, sq_dist: d };
        }
    }
    best
}

fn distinct_rows(points: ArrayView2<f64>) -> usize {
    let rows: HashSet<Vec<u64>> = points
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|x| if *x == 0.0 { 0 } else { x.to_bits() }).collect())
        .collect();
    rows.len()
}

/// k-means++ seeding; returns row indices of the chosen points.
pub fn kmeanspp_seed_indices<R: Rng + ?Sized>(points: ArrayView2<f64>, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    let n = points.nrows();
    if k == 0 {
        return Err(Error::InvalidConfig("k must be >= 1".into()));
    }
    let distinct = distinct_rows(points);
    if k > distinct {
        return Err(Error::TooFewPoints { k, distinct });
    }
    let first = rng.random_range(0..n);
    let mut chosen = vec![first];
    let mut d2: Vec<f64> = par::map_range(n, |i| sq_dist(points.row(i), points.row(first)));
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            if w > 0.0 {
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
        }
        let pick = pick.expect("k <= distinct points leaves positive weight");
        chosen.push(pick);
        let new: Vec<f64> = par::map_range(n, |i| sq_dist(points.row(i), points.row(pick)));
        for (d, x) in d2.iter_mut().zip(new) {
            *d = d.min(x);
        }
    }
    Ok(chosen)
}

pub fn kmeanspp_seed<R: Rng + ?Sized>(points: ArrayView2<f64>, k: usize, rng: &mut R) -> Result<Array2<f64>> {
    let idx = kmeanspp_seed_indices(points, k, rng)?;
    Ok(points.select(Axis(0), &idx))
}

fn assign_all(points: ArrayView2<f64>, centroids: ArrayView2<f64>) -> (Vec<Assignment>, f64) {
    let a = par::map_range(points.nrows(), |i| nearest(centroids, points.row(i)));
    let inertia = a.iter().map(|x| x.sq_dist).sum();
    (a, inertia)
}

/// Lloyd iterations from the given centroids. An emptied cluster takes over
/// the point farthest from its centroid among clusters with at least two
/// members (ties: lowest index).
pub fn lloyd(points: ArrayView2<f64>, init: Array2<f64>, max_iter: usize, tol: f64) -> Result<CentroidModel> {
    if init.ncols() != points.ncols() {
        return Err(Error::DimMismatch {
            expected: points.ncols(),
            found: init.ncols(),
        });
    }
    if points.nrows() == 0 {
        return Err(Error::EmptyCorpus);
    }
    let k = init.nrows();
    let mut centroids = init;
    let (mut assignments, mut inertia) = assign_all(points.view(), centroids.view());
    let mut history = vec![inertia];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut sums = Array2::<f64>::zeros(centroids.raw_dim());
        let mut counts = vec![0usize; k];
        for (row, a) in points.rows().into_iter().zip(&assignments) {
            let mut s = sums.row_mut(a.cluster);
            s += &row;
            counts[a.cluster] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..points.nrows())
                .filter(|&i| counts[assignments[i].cluster] >= 2)
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if assignments[b].sq_dist >= assignments[i].sq_dist => Some(b),
                    _ => Some(i),
                })
                .expect("k <= n leaves a cluster with two members");
            let from = assignments[far].cluster;
            let mut s = sums.row_mut(from);
            s -= &points.row(far);
            counts[from] -= 1;
            sums.row_mut(c).assign(&points.row(far));
            counts[c] = 1;
            assignments[far] = Assignment { cluster: c, sq_dist: 0.0 };
        }
        let mut next = centroids.clone();
        for c in 0..k {
            next.row_mut(c).assign(&(&sums.row(c) / counts[c] as f64));
        }
        let shift = (0..k)
            .map(|c| sq_dist(next.row(c), centroids.row(c)).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        let (a, i) = assign_all(points.view(), centroids.view());
        let unchanged = a.iter().zip(&assignments).all(|(x, y)| x.cluster == y.cluster);
        assignments = a;
        inertia = i;
        history.push(inertia);
        if unchanged || shift < tol {
            break;
        }
    }
    Ok(CentroidModel {
        centroids,
        assignments,
        inertia,
        inertia_history: history,
        iterations,
    })
}

/// Lowest-inertia model over `n_init` seeded k-means++ runs (ties: earliest).
pub fn best_of_restarts(points: ArrayView2<f64>, cfg: &KMeansConfig) -> Result<CentroidModel> {
    if cfg.n_init == 0 {
        return Err(Error::InvalidConfig("n_init must be >= 1".into()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds: Vec<u64> = (0..cfg.n_init).map(|_| master.next_u64()).collect();
    let models = par::try_map(&seeds, |&s| {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let init = kmeanspp_seed(points, cfg.k, &mut rng)?;
        lloyd(points, init, cfg.max_iter, cfg.tol)
    })?;
    let best = models
        .into_iter()
        .reduce(|a, b| if b.inertia < a.inertia { b } else { a })
        .expect("n_init >= 1");
    Ok(best)
}

/// `(cluster, Euclidean distance)` to the nearest centroid.
pub fn assign_nearest(model: &CentroidModel, point: ArrayView1<f64>) -> Result<(usize, f64)> {
    if point.len() != model.dim() {
        return Err(Error::DimMismatch {
            expected: model.dim(),
            found: point.len(),
        });
    }
    let a = nearest(model.centroids.view(), point);
    Ok((a.cluster, a.sq_dist.sqrt()))
}

/// Stacks equal-length vectors into an `n × dim` matrix.
pub fn to_matrix(rows: &[&[f64]]) -> Result<Array2<f64>> {
    let dim = rows.first().map_or(0, |r| r.len());
    let mut m = Array2::zeros((rows.len(), dim));
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                found: r.len(),
            });
        }
        m.row_mut(i).assign(&Array1::from(r.to_vec()));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    use super::*;

    fn cfg(k: usize, seed: u64) -> KMeansConfig {
        KMeansConfig {
            k,
            seed,
            ..KMeansConfig::default()
        }
    }

    #[test]
    fn second_seed_is_forced_to_the_far_pair() {
        let pts = array![[0.0], [0.0], [10.0], [10.0]];
        for s in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let idx = kmeanspp_seed_indices(pts.view(), 2, &mut rng).unwrap();
            assert_ne!(pts[[idx[0], 0]], pts[[idx[1], 0]]);
        }
    }

    #[test]
    fn k_equal_to_distinct_points_uses_all() {
        let pts = array![[0.0, 1.0], [2.0, 2.0], [0.0, 1.0], [5.0, -1.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = kmeanspp_seed(pts.view(), 3, &mut rng).unwrap();
        let mut rows: Vec<Vec<f64>> = c.rows().into_iter().map(|r| r.to_vec()).collect();
        rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(rows, vec![vec![0.0, 1.0], vec![2.0, 2.0], vec![5.0, -1.0]]);
        assert!(matches!(
            kmeanspp_seed(pts.view(), 4, &mut rng),
            Err(Error::TooFewPoints { k: 4, distinct: 3 })
        ));
    }

    #[test]
    fn separable_pairs() {
        let pts = array![[0.0], [0.0], [10.0], [10.0]];
        let m = best_of_restarts(pts.view(), &cfg(2, 1)).unwrap();
        let mut c: Vec<f64> = m.centroids.iter().copied().collect();
        c.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(c, vec![0.0, 10.0]);
        assert_eq!(m.inertia, 0.0);
    }

    #[test]
    fn identical_points_single_cluster() {
        let pts = array![[1.5, -2.0], [1.5, -2.0], [1.5, -2.0]];
        let m = best_of_restarts(pts.view(), &cfg(1, 0)).unwrap();
        assert_eq!(m.centroids.row(0).to_vec(), vec![1.5, -2.0]);
        assert_eq!(m.inertia, 0.0);
    }

    #[test]
    fn empty_cluster_moves_to_farthest_point() {
        // centroid 2 starts far away and attracts nothing
        let pts = array![[0.0], [1.0], [2.0], [9.0]];
        let init = array![[0.5], [5.0], [100.0]];
        let m = lloyd(pts.view(), init, 10, 1e-9).unwrap();
        assert_eq!(m.cluster_sizes(), vec![2, 1, 1]);
        assert_eq!(m.centroids.column(0).to_vec(), vec![0.5, 9.0, 2.0]);
    }

    #[test]
    fn assignment_ties_and_identity() {
        let pts = array![[0.0], [2.0], [4.0]];
        let m = lloyd(pts.view(), array![[0.0], [2.0], [4.0]], 5, 1e-9).unwrap();
        for i in 0..3 {
            assert_eq!(assign_nearest(&m, m.centroids.row(i)).unwrap(), (i, 0.0));
        }
        assert_eq!(assign_nearest(&m, array![1.0].view()).unwrap(), (0, 1.0));
        assert!(assign_nearest(&m, array![1.0, 2.0].view()).is_err());
    }

    #[test]
    fn restarts_are_deterministic_and_no_worse() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let pts = Array2::from_shape_simple_fn((120, 3), || rng.random_range(-5.0..5.0));
        let a = best_of_restarts(pts.view(), &cfg(4, 5)).unwrap();
        let b = best_of_restarts(pts.view(), &cfg(4, 5)).unwrap();
        assert_eq!(a, b);
        let single = best_of_restarts(pts.view(), &KMeansConfig { n_init: 1, ..cfg(4, 5) }).unwrap();
        assert!(a.inertia <= single.inertia);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn lloyd_inertia_never_increases(seed in any::<u64>(), k in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts = Array2::from_shape_simple_fn((60, 4), || rng.random_range(-3.0..3.0));
            let init = kmeanspp_seed(pts.view(), k, &mut rng).unwrap();
            let m = lloyd(pts.view(), init, 300, 0.0).unwrap();
            for w in m.inertia_history.windows(2) {
                prop_assert!(w[1] <= w[0]);
            }
            let total: f64 = m.assignments.iter().map(|a| a.sq_dist).sum();
            prop_assert_eq!(total, m.inertia);
            for (i, a) in m.assignments.iter().enumerate() {
                let n = nearest(m.centroids.view(), pts.row(i));
                prop_assert_eq!(n.cluster, a.cluster);
            }
        }

        #[test]
        fn assign_matches_exhaustive_scan(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts = Array2::from_shape_simple_fn((30, 3), || rng.random_range(-1.0..1.0));
            let m = best_of_restarts(pts.view(), &KMeansConfig { n_init: 2, ..cfg(3, seed) }).unwrap();
            let q = Array1::from_shape_simple_fn(3, || rng.random_range(-2.0..2.0));
            let mut best = (0, f64::INFINITY);
            for c in 0..3 {
                let d: f64 = (0..3).map(|j| (m.centroids[[c, j]] - q[j]).powi(2)).sum::<f64>().sqrt();
                if d < best.1 {
                    best = (c, d);
                }
            }
            let got = assign_nearest(&m, q.view()).unwrap();
            prop_assert_eq!(got.0, best.0);
            prop_assert!((got.1 - best.1).abs() < 1e-12);
        }
    }
}
