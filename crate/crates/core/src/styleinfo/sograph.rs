use std::collections::HashMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::{select_oracle, DocumentSample, Head, ParsedSentence};
use crate::syngraph::escape;

const CONTENT_POS: [&str; 3] = ["NOUN", "PROPN", "VERB"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordNode {
    pub form: String,
    pub upos: String,
}

/// Oracle and summary dependency trees over word nodes, plus co-occurrence
/// links between content words with equal lowercased forms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryOracleGraph {
    pub oracle: Vec<WordNode>,
    pub summary: Vec<WordNode>,
    /// `(head, dependent, deprel)` within the oracle.
    pub oracle_edges: Vec<(usize, usize, String)>,
    pub summary_edges: Vec<(usize, usize, String)>,
    /// `(oracle index, summary index)`
    pub cooccurrence: Vec<(usize, usize)>,
    pub oracle_root: Option<usize>,
    pub summary_root: Option<usize>,
}

fn words(s: &ParsedSentence) -> Vec<WordNode> {
    s.tokens
        .iter()
        .map(|t| WordNode {
            form: t.form.clone(),
            upos: t.upos.clone(),
        })
        .collect()
}

fn arcs(s: &ParsedSentence) -> Vec<(usize, usize, String)> {
    s.tokens
        .iter()
        .enumerate()
        .filter_map(|(d, t)| match t.head {
            Head::Token(h) => Some((h, d, t.deprel.clone())),
            Head::Root => None,
        })
        .collect()
}

fn is_content(upos: &str) -> bool {
    CONTENT_POS.contains(&upos)
}

pub fn build_summary_oracle_graph(summary: &ParsedSentence, oracle: &ParsedSentence) -> SummaryOracleGraph {
    let mut cooccurrence = Vec::new();
    for (i, o) in oracle.tokens.iter().enumerate() {
        if !is_content(&o.upos) {
            continue;
        }
        let of = o.form.to_lowercase();
        for (j, s) in summary.tokens.iter().enumerate() {
            if is_content(&s.upos) && s.form.to_lowercase() == of {
                cooccurrence.push((i, j));
            }
        }
    }
    SummaryOracleGraph {
        oracle: words(oracle),
        summary: words(summary),
        oracle_edges: arcs(oracle),
        summary_edges: arcs(summary),
        cooccurrence,
        oracle_root: oracle.root(),
        summary_root: summary.root(),
    }
}

impl SummaryOracleGraph {
    /// Oracle arcs green, summary arcs blue, co-occurrence dashed orange;
    /// roots carry a self-loop.
    pub fn to_dot(&self, title: &str) -> String {
        let mut out = String::from("graph summary_oracle {\n");
        let _ = writeln!(out, "  label=\"{}\";", escape(title));
        out.push_str("  node [shape=ellipse];\n");
        for (prefix, nodes, edges, root, color, name) in [
            ("o", &self.oracle, &self.oracle_edges, self.oracle_root, "green", "Oracle"),
            ("s", &self.summary, &self.summary_edges, self.summary_root, "blue", "Summary"),
        ] {
            let _ = writeln!(out, "  subgraph cluster_{prefix} {{");
            let _ = writeln!(out, "    label=\"{name}\";");
            for (i, w) in nodes.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "    {prefix}{i} [label=\"{}\\n{}\"];",
                    escape(&w.upos),
                    escape(&w.form)
                );
            }
            for (h, d, rel) in edges {
                let _ = writeln!(out, "    {prefix}{h} -- {prefix}{d} [label=\"{}\", color={color}];", escape(rel));
            }
            if let Some(r) = root {
                let _ = writeln!(out, "    {prefix}{r} -- {prefix}{r} [color={color}];");
            }
            out.push_str("  }\n");
        }
        for (i, j) in &self.cooccurrence {
            let _ = writeln!(out, "  o{i} -- s{j} [color=orange, style=dashed];");
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionStats {
    pub name: String,
    /// Samples that were found and had a summary.
    pub n: usize,
    pub missing: Vec<String>,
    /// Mean of oracle tokens / summary tokens.
    pub mean_ratio: f64,
    /// Mean co-occurrence edge count.
    pub mean_alignment: f64,
}

/// Compression ratio and alignment averaged over the listed samples, using
/// the first summary sentence and its oracle.
pub fn compression_stats(name: &str, ids: &[String], samples: &HashMap<&str, &DocumentSample>) -> CompressionStats {
    let (mut ratio, mut align, mut n) = (0.0, 0.0, 0);
    let mut missing = Vec::new();
    for id in ids {
        let Some(s) = samples.get(id.as_str()) else {
            missing.push(id.clone());
            continue;
        };
        let Some(user) = s.summary.first().filter(|u| !u.is_empty()) else {
            missing.push(id.clone());
            continue;
        };
        let Some((oi, _)) = select_oracle(user, &s.article) else {
            missing.push(id.clone());
            continue;
        };
        let oracle = &s.article[oi];
        ratio += oracle.len() as f64 / user.len() as f64;
        align += build_summary_oracle_graph(user, oracle).cooccurrence.len() as f64;
        n += 1;
    }
    let div = |x: f64| if n == 0 { 0.0 } else { x / n as f64 };
    CompressionStats {
        name: name.to_string(),
        n,
        missing,
        mean_ratio: div(ratio),
        mean_alignment: div(align),
    }
}
