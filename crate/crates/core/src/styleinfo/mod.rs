//! Style analysis: labeled motif census, Summary–Oracle graphs and
//! compression statistics.
//!
//! SynGraphs are bipartite (words only touch relation nodes), so no three
//! nodes are ever mutually adjacent. `Tri` is therefore the three-node path
//! centred on one node, keyed center first. Motifs ignore edge direction and
//! are not required to be induced.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::syngraph::{LabelVocab, SynGraph};

mod census;
mod sograph;

pub use census::{census_report, write_census_csv, CensusReport, CensusRow, DEFAULT_TOP_K};
pub use sograph::{build_summary_oracle_graph, compression_stats, CompressionStats, SummaryOracleGraph, WordNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    /// Oracle (article) sentence.
    O,
    /// Summary sentence.
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Shape {
    /// Center plus three neighbours: center label, then sorted leaf labels.
    Star,
    /// Three-node path: center label, then sorted endpoint labels.
    Tri,
    /// Four-node simple path, in its lexicographically smaller orientation.
    Four,
}

impl Shape {
    pub fn arity(self) -> usize {
        match self {
            Shape::Star | Shape::Four => 4,
            Shape::Tri => 3,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MotifKey {
    pub role: Role,
    pub shape: Shape,
    pub labels: Vec<String>,
}

impl fmt::Display for MotifKey {
    /// `O Star pobj ADP ADP ADP`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.role, self.shape, self.labels.join(" "))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MotifCensus {
    pub role: Option<Role>,
    pub counts: BTreeMap<MotifKey, u64>,
}

impl MotifCensus {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Share of all motif instances in this graph; empty when there are none.
    pub fn ratios(&self) -> BTreeMap<&MotifKey, f64> {
        let total = self.total();
        if total == 0 {
            return BTreeMap::new();
        }
        self.counts.iter().map(|(k, &c)| (k, c as f64 / total as f64)).collect()
    }

    pub fn count(&self, shape: Shape) -> u64 {
        self.counts.iter().filter(|(k, _)| k.shape == shape).map(|(_, c)| c).sum()
    }
}

fn four_key(a: &str, b: &str, c: &str, d: &str) -> Vec<String> {
    let fwd = [a, b, c, d];
    let rev = [d, c, b, a];
    let pick = if rev < fwd { rev } else { fwd };
    pick.iter().map(|s| s.to_string()).collect()
}

/// Star, Tri and Four instances of `g`, keyed by display labels.
pub fn count_motifs(g: &SynGraph, role: Role, vocab: &LabelVocab) -> MotifCensus {
    let adj = g.neighbors();
    let label: Vec<&str> = g.node_labels.iter().map(|&l| vocab.display_label(l)).collect();
    let mut counts: BTreeMap<MotifKey, u64> = BTreeMap::new();
    let mut bump = |shape, labels: Vec<String>| {
        *counts.entry(MotifKey { role, shape, labels }).or_default() += 1;
    };
    for (c, nb) in adj.iter().enumerate() {
        let d = nb.len();
        for i in 0..d {
            for j in i + 1..d {
                let mut ends = [label[nb[i]], label[nb[j]]];
                ends.sort_unstable();
                bump(Shape::Tri, vec![label[c].into(), ends[0].into(), ends[1].into()]);
                for k in j + 1..d {
                    let mut leaves = [label[nb[i]], label[nb[j]], label[nb[k]]];
                    leaves.sort_unstable();
                    let mut key = vec![label[c].to_string()];
                    key.extend(leaves.iter().map(|s| s.to_string()));
                    bump(Shape::Star, key);
                }
            }
        }
    }
    // every 4-path a-b-c-d is visited once through its middle edge b < c
    for b in 0..adj.len() {
        for &c in adj[b].iter().filter(|&&c| c > b) {
            for &a in adj[b].iter().filter(|&&a| a != c) {
                for &d in adj[c].iter().filter(|&&d| d != b && d != a) {
                    bump(Shape::Four, four_key(label[a], label[b], label[c], label[d]));
                }
            }
        }
    }
    MotifCensus {
        role: Some(role),
        counts,
    }
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Exhaustive node-subset enumeration, independent of the neighbour-list
    //! walk in `count_motifs`.
    use super::*;

    fn adjacent(g: &SynGraph, a: usize, b: usize) -> bool {
        g.edges
            .iter()
            .any(|&(x, y)| (x as usize, y as usize) == (a, b) || (x as usize, y as usize) == (b, a))
    }

    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
            .collect()
    }

    fn permutations(s: &[usize]) -> Vec<Vec<usize>> {
        if s.len() <= 1 {
            return vec![s.to_vec()];
        }
        let mut out = Vec::new();
        for i in 0..s.len() {
            let mut rest = s.to_vec();
            let x = rest.remove(i);
            for mut p in permutations(&rest) {
                p.insert(0, x);
                out.push(p);
            }
        }
        out
    }

    pub fn brute_force(g: &SynGraph, role: Role, vocab: &LabelVocab) -> MotifCensus {
        let n = g.n_nodes();
        let lab = |i: usize| vocab.display_label(g.node_labels[i]).to_string();
        let mut counts: BTreeMap<MotifKey, u64> = BTreeMap::new();
        let mut add = |shape, labels| {
            *counts.entry(MotifKey { role, shape, labels }).or_default() += 1;
        };
        for s in subsets(n, 3) {
            // a 3-subset holds one path per node adjacent to both others
            for &c in &s {
                let o: Vec<usize> = s.iter().copied().filter(|&x| x != c).collect();
                if adjacent(g, c, o[0]) && adjacent(g, c, o[1]) {
                    let mut e = [lab(o[0]), lab(o[1])];
                    e.sort();
                    add(Shape::Tri, vec![lab(c), e[0].clone(), e[1].clone()]);
                }
            }
        }
        for s in subsets(n, 4) {
            for &c in &s {
                let o: Vec<usize> = s.iter().copied().filter(|&x| x != c).collect();
                if o.iter().all(|&x| adjacent(g, c, x)) {
                    let mut l: Vec<String> = o.iter().map(|&x| lab(x)).collect();
                    l.sort();
                    let mut key = vec![lab(c)];
                    key.extend(l);
                    add(Shape::Star, key);
                }
            }
            for p in permutations(&s) {
                // each undirected path appears as two orderings
                if p[0] < p[3] && adjacent(g, p[0], p[1]) && adjacent(g, p[1], p[2]) && adjacent(g, p[2], p[3]) {
                    let key = four_key(&lab(p[0]), &lab(p[1]), &lab(p[2]), &lab(p[3]));
                    add(Shape::Four, key);
                }
            }
        }
        MotifCensus {
            role: Some(role),
            counts,
        }
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::oracle::brute_force;
    use super::*;

    fn vocab() -> LabelVocab {
        LabelVocab::from_labels(
            ["<unk>", "ADJ", "NOUN", "VERB", "dep:amod", "dep:nsubj"]
                .map(String::from)
                .to_vec(),
        )
        .unwrap()
    }

    fn graph(labels: &[u32], edges: &[(u32, u32)]) -> SynGraph {
        SynGraph {
            node_labels: labels.to_vec(),
            edges: edges.to_vec(),
            directed: false,
            n_words: labels.len(),
        }
    }

    fn shapes(c: &MotifCensus) -> (u64, u64, u64) {
        (c.count(Shape::Star), c.count(Shape::Tri), c.count(Shape::Four))
    }

    #[test]
    fn small_shapes() {
        let v = vocab();
        let k3 = graph(&[2, 2, 2], &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(shapes(&count_motifs(&k3, Role::O, &v)), (0, 3, 0));
        let star = graph(&[5, 2, 2, 3], &[(0, 1), (0, 2), (0, 3)]);
        assert_eq!(shapes(&count_motifs(&star, Role::O, &v)), (1, 3, 0));
        let p4 = graph(&[2, 5, 3, 4], &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(shapes(&count_motifs(&p4, Role::O, &v)), (0, 2, 1));
        for g in [&k3, &star, &p4] {
            assert_eq!(count_motifs(g, Role::S, &v), brute_force(g, Role::S, &v));
        }
    }

    #[test]
    fn key_format() {
        let v = vocab();
        let star = graph(&[5, 3, 2, 2], &[(0, 1), (0, 2), (0, 3)]);
        let c = count_motifs(&star, Role::O, &v);
        let keys: Vec<String> = c.counts.keys().map(|k| k.to_string()).collect();
        assert!(keys.contains(&"O Star nsubj NOUN NOUN VERB".to_string()));
        assert!(keys.contains(&"O Tri nsubj NOUN NOUN".to_string()));
        assert!(keys.contains(&"O Tri nsubj NOUN VERB".to_string()));

        let p4 = graph(&[3, 5, 2, 4], &[(0, 1), (1, 2), (2, 3)]);
        let c = count_motifs(&p4, Role::S, &v);
        let four: Vec<&MotifKey> = c.counts.keys().filter(|k| k.shape == Shape::Four).collect();
        // byte order puts upper case first, so VERB.. beats amod..
        assert_eq!(four[0].labels, ["VERB", "nsubj", "NOUN", "amod"]);
        let rev = graph(&[4, 2, 5, 3], &[(0, 1), (1, 2), (2, 3)]);
        let c = count_motifs(&rev, Role::S, &v);
        assert!(c.counts.keys().any(|k| k.shape == Shape::Four && k.labels == four[0].labels));
    }

    #[test]
    fn degree_five_center() {
        let v = vocab();
        let g = graph(&[4, 1, 1, 1, 1, 1], &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]);
        let c = count_motifs(&g, Role::O, &v);
        assert_eq!(shapes(&c), (10, 10, 0));
        let r = c.ratios();
        assert!((r.values().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(count_motifs(&graph(&[1], &[]), Role::O, &v).ratios().is_empty());
    }

    fn arb_graph() -> impl Strategy<Value = SynGraph> {
        (1usize..=12).prop_flat_map(|n| {
            let pairs: Vec<(u32, u32)> = (0..n as u32).flat_map(|a| (a + 1..n as u32).map(move |b| (a, b))).collect();
            let m = pairs.len();
            (
                prop::collection::vec(1u32..6, n),
                prop::collection::vec(prop::bool::weighted(0.3), m),
            )
                .prop_map(move |(labels, keep)| {
                    let edges = pairs.iter().zip(&keep).filter(|(_, &k)| k).map(|(&e, _)| e).collect::<Vec<_>>();
                    graph(&labels, &edges)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]

        #[test]
        fn matches_subset_enumeration(g in arb_graph()) {
            let v = vocab();
            prop_assert_eq!(count_motifs(&g, Role::O, &v), brute_force(&g, Role::O, &v));
        }

        #[test]
        fn invariant_under_relabelling(g in arb_graph(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let n = g.n_nodes();
            let mut perm: Vec<u32> = (0..n as u32).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let mut labels = vec![0; n];
            for (i, &p) in perm.iter().enumerate() {
                labels[p as usize] = g.node_labels[i];
            }
            let edges: Vec<(u32, u32)> = g.edges.iter().map(|&(a, b)| (perm[b as usize], perm[a as usize])).collect();
            let h = graph(&labels, &edges);
            let v = vocab();
            prop_assert_eq!(count_motifs(&g, Role::S, &v), count_motifs(&h, Role::S, &v));
        }
    }
}
