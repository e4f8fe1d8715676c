//! Parsed article/summary corpora.
//!
//! Heads are 0-based internally with [`Head::Root`] as the sentinel; the
//! on-disk format uses 1-based heads with `0` for ROOT (see [`format`]).

use std::fmt;

mod format;
mod oracle;
pub mod synth;
mod triplet;

pub use format::{
    load_parsed_corpus, open_corpus, record_line, write_parsed_corpus, CorpusReader, LoadReport,
    Reject,
};
pub use oracle::{jaccard, normalize_forms, normalize_tokens, select_oracle, select_oracle_sets, TokenSet};
pub use triplet::{extract_triplet, sample_rng, SkipReason, StyleTriplet, TripletOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Head {
    Root,
    Token(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenRec {
    pub form: String,
    pub upos: String,
    pub head: Head,
    pub deprel: String,
}

impl TokenRec {
    pub fn new(form: &str, upos: &str, head: Head, deprel: &str) -> Self {
        Self {
            form: form.to_string(),
            upos: upos.to_string(),
            head,
            deprel: deprel.to_string(),
        }
    }
}

/// Why a sentence failed the single-root tree check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Defect {
    Empty,
    EmptyField { token: usize },
    HeadOutOfRange { token: usize, head: usize },
    SelfHead { token: usize },
    RootCount(usize),
    Cycle { token: usize },
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Defect::Empty => write!(f, "empty sentence"),
            Defect::EmptyField { token } => write!(f, "token {token} has empty upos or deprel"),
            Defect::HeadOutOfRange { token, head } => {
                write!(f, "head out of range (token {token}, head {head})")
            }
            Defect::SelfHead { token } => write!(f, "token {token} is its own head"),
            Defect::RootCount(n) => write!(f, "expected exactly one root, found {n}"),
            Defect::Cycle { token } => write!(f, "head cycle through token {token}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedSentence {
    pub tokens: Vec<TokenRec>,
}

impl ParsedSentence {
    pub fn new(tokens: Vec<TokenRec>) -> Self {
        Self { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn forms(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.form.as_str())
    }

    /// Index of the token attached to ROOT, if there is exactly one.
    pub fn root(&self) -> Option<usize> {
        let mut roots = self
            .tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.head == Head::Root);
        match (roots.next(), roots.next()) {
            (Some((i, _)), None) => Some(i),
            _ => None,
        }
    }

    /// Checks the single-root tree invariant and per-token field rules.
    pub fn validate(&self) -> Result<(), Defect> {
        let n = self.tokens.len();
        if n == 0 {
            return Err(Defect::Empty);
        }
        let mut roots = 0;
        for (i, t) in self.tokens.iter().enumerate() {
            if t.upos.is_empty() || t.deprel.is_empty() {
                return Err(Defect::EmptyField { token: i });
            }
            match t.head {
                Head::Root => roots += 1,
                Head::Token(h) if h >= n => {
                    return Err(Defect::HeadOutOfRange { token: i, head: h })
                }
                Head::Token(h) if h == i => return Err(Defect::SelfHead { token: i }),
                Head::Token(_) => {}
            }
        }
        if roots != 1 {
            return Err(Defect::RootCount(roots));
        }
        // With one root and in-range heads, the structure is a tree iff every
        // token reaches the root within n steps.
        for start in 0..n {
            let mut cur = start;
            let mut steps = 0;
            while let Head::Token(h) = self.tokens[cur].head {
                cur = h;
                steps += 1;
                if steps > n {
                    return Err(Defect::Cycle { token: start });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentSample {
    pub id: String,
    pub article: Vec<ParsedSentence>,
    pub summary: Vec<ParsedSentence>,
}

impl DocumentSample {
    pub fn validate(&self) -> Result<(), String> {
        if self.article.is_empty() {
            return Err("empty article".into());
        }
        if self.summary.is_empty() {
            return Err("empty summary".into());
        }
        for (part, sents) in [("article", &self.article), ("summary", &self.summary)] {
            for (i, s) in sents.iter().enumerate() {
                s.validate()
                    .map_err(|d| format!("{d} ({part} sentence {i})"))?;
            }
        }
        Ok(())
    }
}
