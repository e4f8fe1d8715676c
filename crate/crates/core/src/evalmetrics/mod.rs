//! Summary metrics: ROUGE-1/2/L, GLEU, novel n-gram ratios, Jaccard to the
//! oracle and Oracle Hit, plus corpus-level evaluation of generated runs.
//!
//! Texts are lists of tokenized sentences. N-grams never span a sentence
//! boundary; ROUGE-L runs on the concatenated token sequence.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{select_oracle_sets, TokenSet};

mod run;

pub use run::{
    choice_counts, cluster_best, evaluate_run, gold_run, read_run, write_run, ClusterBest, EvalOptions, GeneratedRun, MetricReport,
    SampleScores, Selector,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    fn from_counts(matched: usize, cand: usize, refr: usize) -> Self {
        if cand == 0 || refr == 0 {
            return Self::default();
        }
        let p = matched as f64 / cand as f64;
        let r = matched as f64 / refr as f64;
        let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        Self {
            precision: p,
            recall: r,
            f1,
        }
    }
}

pub fn ngram_counts(sentences: &[Vec<String>], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n == 0 {
        return counts;
    }
    for s in sentences {
        for g in s.windows(n) {
            *counts.entry(g).or_insert(0) += 1;
        }
    }
    counts
}

fn clipped_matches(a: &HashMap<&[String], usize>, b: &HashMap<&[String], usize>) -> usize {
    a.iter().map(|(g, &c)| c.min(b.get(g).copied().unwrap_or(0))).sum()
}

/// Clipped n-gram overlap; zero when either side has no n-grams.
pub fn rouge_n(cand: &[Vec<String>], refr: &[Vec<String>], n: usize) -> Prf {
    let (c, r) = (ngram_counts(cand, n), ngram_counts(refr, n));
    Prf::from_counts(clipped_matches(&c, &r), c.values().sum(), r.values().sum())
}

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0; b.len() + 1];
    let mut cur = vec![0; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// LCS over the concatenated sentences.
pub fn rouge_l(cand: &[Vec<String>], refr: &[Vec<String>]) -> Prf {
    let a: Vec<String> = cand.concat();
    let b: Vec<String> = refr.concat();
    Prf::from_counts(lcs_len(&a, &b), a.len(), b.len())
}

/// min(precision, recall) of clipped n-gram matches pooled over n = 1..=max_n.
pub fn gleu(cand: &[Vec<String>], refr: &[Vec<String>], max_n: usize) -> f64 {
    let (mut matched, mut nc, mut nr) = (0, 0, 0);
    for n in 1..=max_n {
        let (c, r) = (ngram_counts(cand, n), ngram_counts(refr, n));
        matched += clipped_matches(&c, &r);
        nc += c.values().sum::<usize>();
        nr += r.values().sum::<usize>();
    }
    if nc == 0 || nr == 0 {
        return 0.0;
    }
    (matched as f64 / nc as f64).min(matched as f64 / nr as f64)
}

/// Share of summary n-gram instances absent from the article's n-grams;
/// `None` when the summary has no n-grams.
pub fn novel_ngram_ratio(summary: &[Vec<String>], article: &[Vec<String>], n: usize) -> Option<f64> {
    let src: HashSet<&[String]> = article.iter().flat_map(|s| s.windows(n.max(1))).collect();
    let (mut total, mut novel) = (0usize, 0usize);
    for s in summary {
        for g in s.windows(n.max(1)) {
            total += 1;
            novel += usize::from(!src.contains(g));
        }
    }
    (total > 0).then(|| novel as f64 / total as f64)
}

/// Mean over summary sentences of the Jaccard score of each one's oracle.
pub fn avg_jaccard_to_oracle(summary: &[TokenSet], article: &[TokenSet]) -> f64 {
    if summary.is_empty() || article.is_empty() {
        return 0.0;
    }
    let total: f64 = summary
        .iter()
        .map(|s| select_oracle_sets(s, article).map_or(0.0, |(_, j)| j))
        .sum();
    total / summary.len() as f64
}

/// Whether the first gold and first generated sentences share an oracle.
/// A missing generated sentence is a miss.
pub fn oracle_hit(gold_first: &TokenSet, generated_first: Option<&TokenSet>, article: &[TokenSet]) -> bool {
    let Some(g) = generated_first else {
        return false;
    };
    match (select_oracle_sets(gold_first, article), select_oracle_sets(g, article)) {
        (Some((a, _)), Some((b, _))) => a == b,
        _ => false,
    }
}

#[cfg(test)]
pub(crate) fn toks(text: &str) -> Vec<Vec<String>> {
    text.split('|')
        .map(|s| s.split_whitespace().map(String::from).collect())
        .collect()
}
