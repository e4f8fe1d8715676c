//! SynGraphs: dependency parses as homogeneous labeled graphs.
//!
//! Every token becomes a word node labeled with its POS tag. Every non-root
//! dependency `head --rel--> dep` is replaced by a relation node placed
//! between the two words (a Levi transform), and relation nodes with the same
//! label are merged, so a sentence with `n` tokens yields at most `2n - 1`
//! nodes. The ROOT attachment gets no relation node; the root word only has
//! the self-loop that [`normalized_adjacency`] adds.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::corpus::{Head, ParsedSentence};
use crate::error::{Error, Result};

pub const UNK: &str = "<unk>";
/// Prefix separating relation labels from POS tags in the vocabulary.
pub const DEP_PREFIX: &str = "dep:";
/// Graphs with more nodes than this use a sparse adjacency.
pub const DENSE_LIMIT: usize = 512;

/// Sorted node-label vocabulary: `<unk>`, POS tags, then `dep:`-prefixed
/// relation labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelVocab {
    labels: Vec<String>,
    index: HashMap<String, u32>,
}

impl LabelVocab {
    pub fn build<'a>(sentences: impl IntoIterator<Item = &'a ParsedSentence>) -> Result<Self> {
        let mut labels = BTreeSet::new();
        let mut any = false;
        for s in sentences {
            any = true;
            for t in &s.tokens {
                labels.insert(t.upos.clone());
                if t.head != Head::Root {
                    labels.insert(format!("{DEP_PREFIX}{}", t.deprel));
                }
            }
        }
        if !any {
            return Err(Error::EmptyCorpus);
        }
        labels.insert(UNK.to_string());
        Self::from_labels(labels.into_iter().collect())
    }

    pub fn from_labels(labels: Vec<String>) -> Result<Self> {
        let index: HashMap<String, u32> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i as u32))
            .collect();
        if index.len() != labels.len() {
            return Err(Error::Corrupt("duplicate vocabulary label".into()));
        }
        if !index.contains_key(UNK) {
            return Err(Error::Corrupt("vocabulary lacks <unk>".into()));
        }
        Ok(Self { labels, index })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn unk(&self) -> u32 {
        self.index[UNK]
    }

    pub fn get(&self, label: &str) -> u32 {
        self.index.get(label).copied().unwrap_or_else(|| self.unk())
    }

    pub fn pos(&self, upos: &str) -> u32 {
        self.get(upos)
    }

    pub fn dep(&self, deprel: &str) -> u32 {
        self.get(&format!("{DEP_PREFIX}{deprel}"))
    }

    pub fn label(&self, id: u32) -> &str {
        &self.labels[id as usize]
    }

    /// Label with the relation prefix stripped, as used in motif keys.
    pub fn display_label(&self, id: u32) -> &str {
        let l = self.label(id);
        l.strip_prefix(DEP_PREFIX).unwrap_or(l)
    }

    pub fn is_relation(&self, id: u32) -> bool {
        self.label(id).starts_with(DEP_PREFIX)
    }
}

impl TryFrom<Vec<String>> for LabelVocab {
    type Error = Error;

    fn try_from(labels: Vec<String>) -> Result<Self> {
        Self::from_labels(labels)
    }
}

impl From<LabelVocab> for Vec<String> {
    fn from(v: LabelVocab) -> Self {
        v.labels
    }
}

/// Word nodes `0..n_words` in token order, then one node per distinct
/// relation label in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynGraph {
    pub node_labels: Vec<u32>,
    /// Deduplicated edges. For undirected graphs each pair appears once, in
    /// the orientation it was first produced.
    pub edges: Vec<(u32, u32)>,
    pub directed: bool,
    pub n_words: usize,
}

impl SynGraph {
    pub fn n_nodes(&self) -> usize {
        self.node_labels.len()
    }

    /// Undirected neighbour lists (direction ignored), sorted.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.n_nodes()];
        for &(a, b) in &self.edges {
            adj[a as usize].insert(b as usize);
            adj[b as usize].insert(a as usize);
        }
        adj.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    /// Same nodes and labels with the other edge interpretation.
    pub fn with_direction(&self, directed: bool) -> SynGraph {
        if directed == self.directed {
            return self.clone();
        }
        let mut g = self.clone();
        g.directed = directed;
        if !directed {
            let mut seen = HashSet::new();
            g.edges
                .retain(|&(a, b)| seen.insert((a.min(b), a.max(b))));
        }
        g
    }

    /// Graphviz rendering; relation nodes are drawn as boxes.
    pub fn to_dot(&self, vocab: &LabelVocab) -> String {
        let (kind, arrow) = if self.directed {
            ("digraph", "->")
        } else {
            ("graph", "--")
        };
        let mut out = format!("{kind} syngraph {{\n");
        for (i, &l) in self.node_labels.iter().enumerate() {
            let shape = if i < self.n_words { "ellipse" } else { "box" };
            let _ = writeln!(
                out,
                "  n{i} [label=\"{}\", shape={shape}];",
                escape(vocab.label(l))
            );
        }
        for &(a, b) in &self.edges {
            let _ = writeln!(out, "  n{a} {arrow} n{b};");
        }
        out.push_str("}\n");
        out
    }
}

pub(crate) fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn build_syngraph(s: &ParsedSentence, directed: bool, vocab: &LabelVocab) -> SynGraph {
    let n = s.len();
    let mut node_labels: Vec<u32> = s.tokens.iter().map(|t| vocab.pos(&t.upos)).collect();
    let mut rel_nodes: HashMap<&str, u32> = HashMap::new();
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    let mut add = |a: u32, b: u32, edges: &mut Vec<(u32, u32)>| {
        let key = if directed { (a, b) } else { (a.min(b), a.max(b)) };
        if seen.insert(key) {
            edges.push((a, b));
        }
    };
    for (d, t) in s.tokens.iter().enumerate() {
        let Head::Token(h) = t.head else { continue };
        let rel = *rel_nodes.entry(t.deprel.as_str()).or_insert_with(|| {
            node_labels.push(vocab.dep(&t.deprel));
            (node_labels.len() - 1) as u32
        });
        add(h as u32, rel, &mut edges);
        add(rel, d as u32, &mut edges);
    }
    SynGraph {
        node_labels,
        edges,
        directed,
        n_words: n,
    }
}

/// Compressed sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

/// Normalized adjacency N̂ with self-loops: `M^-1/2 Â M^-1/2` for undirected
/// graphs, `M^-1 Â` (row-stochastic) for directed ones, where `Â = A + I`
/// and `M` holds the row sums of `Â`.
#[derive(Debug, Clone, PartialEq)]
pub enum NormalizedAdjacency {
    Dense(Array2<f64>),
    Sparse(CsrMatrix),
}

pub fn normalized_adjacency(g: &SynGraph) -> NormalizedAdjacency {
    let n = g.n_nodes();
    let mut rows: Vec<BTreeSet<usize>> = (0..n).map(|i| BTreeSet::from([i])).collect();
    for &(a, b) in &g.edges {
        rows[a as usize].insert(b as usize);
        if !g.directed {
            rows[b as usize].insert(a as usize);
        }
    }
    let deg: Vec<f64> = rows.iter().map(|r| r.len() as f64).collect();
    let weight = |i: usize, j: usize| {
        if g.directed {
            1.0 / deg[i]
        } else {
            1.0 / (deg[i] * deg[j]).sqrt()
        }
    };
    if n <= DENSE_LIMIT {
        let mut m = Array2::zeros((n, n));
        for (i, r) in rows.iter().enumerate() {
            for &j in r {
                m[[i, j]] = weight(i, j);
            }
        }
        NormalizedAdjacency::Dense(m)
    } else {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            for &j in r {
                cols.push(j);
                vals.push(weight(i, j));
            }
            row_ptr.push(cols.len());
        }
        NormalizedAdjacency::Sparse(CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        })
    }
}

impl NormalizedAdjacency {
    pub fn n(&self) -> usize {
        match self {
            NormalizedAdjacency::Dense(m) => m.nrows(),
            NormalizedAdjacency::Sparse(c) => c.n,
        }
    }

    /// `N̂ · h`
    pub fn apply(&self, h: ArrayView2<f64>) -> Array2<f64> {
        match self {
            NormalizedAdjacency::Dense(m) => m.dot(&h),
            NormalizedAdjacency::Sparse(c) => {
                let mut out = Array2::zeros((c.n, h.ncols()));
                for i in 0..c.n {
                    let mut row = out.row_mut(i);
                    for k in c.row_ptr[i]..c.row_ptr[i + 1] {
                        row.scaled_add(c.vals[k], &h.row(c.cols[k]));
                    }
                }
                out
            }
        }
    }

    /// `N̂ᵀ · h`
    pub fn apply_transpose(&self, h: ArrayView2<f64>) -> Array2<f64> {
        match self {
            NormalizedAdjacency::Dense(m) => m.t().dot(&h),
            NormalizedAdjacency::Sparse(c) => {
                let mut out = Array2::zeros((c.n, h.ncols()));
                for i in 0..c.n {
                    for k in c.row_ptr[i]..c.row_ptr[i + 1] {
                        out.row_mut(c.cols[k]).scaled_add(c.vals[k], &h.row(i));
                    }
                }
                out
            }
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match self {
            NormalizedAdjacency::Dense(m) => m.clone(),
            NormalizedAdjacency::Sparse(c) => {
                let mut m = Array2::zeros((c.n, c.n));
                for i in 0..c.n {
                    for k in c.row_ptr[i]..c.row_ptr[i + 1] {
                        m[[i, c.cols[k]]] = c.vals[k];
                    }
                }
                m
            }
        }
    }
}
