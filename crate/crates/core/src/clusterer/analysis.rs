use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sq_dist;
use crate::error::{Error, Result};
use crate::par;

fn choose2(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Chance-corrected Rand index. Two trivial partitions (all-in-one or
/// all-singletons on both sides) score 1.
pub fn adjusted_rand_index<A: Eq + Hash, B: Eq + Hash>(a: &[A], b: &[B]) -> f64 {
    assert_eq!(a.len(), b.len(), "partitions over different point sets");
    let mut table: HashMap<(&A, &B), u64> = HashMap::new();
    let mut rows: HashMap<&A, u64> = HashMap::new();
    let mut cols: HashMap<&B, u64> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&n| choose2(n)).sum();
    let sa: f64 = rows.values().map(|&n| choose2(n)).sum();
    let sb: f64 = cols.values().map(|&n| choose2(n)).sum();
    let total = choose2(a.len() as u64);
    let expected = if total > 0.0 { sa * sb / total } else { 0.0 };
    let max = (sa + sb) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Mean silhouette over at most `sample_cap` points drawn uniformly with
/// `seed`. Distances are Euclidean and computed within the subsample.
pub fn silhouette(points: ArrayView2<f64>, labels: &[usize], sample_cap: usize, seed: u64) -> Result<f64> {
    let n = points.nrows();
    if labels.len() != n {
        return Err(Error::DimMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    let idx: Vec<usize> = if n > sample_cap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = rand::seq::index::sample(&mut rng, n, sample_cap).into_vec();
        v.sort_unstable();
        v
    } else {
        (0..n).collect()
    };
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for &i in &idx {
        *sizes.entry(labels[i]).or_default() += 1;
    }
    if sizes.len() < 2 {
        return Err(Error::Silhouette("need at least two clusters".into()));
    }
    if sizes.values().all(|&s| s == 1) {
        return Err(Error::Silhouette("every cluster is a singleton".into()));
    }
    let s = par::map(&idx, |&i| {
        let own = labels[i];
        if sizes[&own] == 1 {
            return 0.0;
        }
        let mut sums: BTreeMap<usize, f64> = BTreeMap::new();
        for &j in &idx {
            if j != i {
                *sums.entry(labels[j]).or_default() += sq_dist(points.row(i), points.row(j)).sqrt();
            }
        }
        let a = sums.get(&own).copied().unwrap_or(0.0) / (sizes[&own] - 1) as f64;
        let b = sums
            .iter()
            .filter(|(c, _)| **c != own)
            .map(|(c, d)| d / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m == 0.0 {
            0.0
        } else {
            (b - a) / m
        }
    });
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

/// Coordinates on the top two principal components. Each component's sign
/// makes its largest-magnitude loading positive; a component without
/// variance yields zeros.
pub fn project_2d(points: ArrayView2<f64>) -> Result<Array2<f64>> {
    let (n, d) = points.dim();
    if n < 2 {
        return Err(Error::Shape(format!("projection needs at least 2 points, got {n}")));
    }
    let mean = points.mean_axis(Axis(0)).expect("n >= 2");
    let centered = &points - &mean;
    let cov = centered.t().dot(&centered) / (n - 1) as f64;
    let eig = SymmetricEigen::new(DMatrix::from_fn(d, d, |i, j| cov[[i, j]]));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut out = Array2::zeros((n, 2));
    for (slot, &c) in order.iter().take(2).enumerate() {
        if eig.eigenvalues[c] <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            continue;
        }
        let v = eig.eigenvectors.column(c);
        let lead = (0..d).fold(0, |b, i| if v[i].abs() > v[b].abs() { i } else { b });
        let sign = if v[lead] < 0.0 { -1.0 } else { 1.0 };
        for (r, row) in centered.rows().into_iter().enumerate() {
            out[[r, slot]] = sign * (0..d).map(|i| row[i] * v[i]).sum::<f64>();
        }
    }
    Ok(out)
}
