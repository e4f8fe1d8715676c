//! Synthetic corpora with planted summarization styles.
//!
//! Every sample has one "oracle" article sentence (a transitive clause with
//! adjectival/adverbial modifiers and an optional prepositional phrase) hidden
//! among structurally different distractor sentences built from a disjoint
//! vocabulary. The single summary sentence is the oracle rewritten by the
//! sample's planted style:
//!
//! * `A`: delete every ADJ/ADV token.
//! * `B`: keep the root verb with its subject and object heads and embed them
//!   under a new attributing subject ("X said ...").
//! * `C`: passivize (object becomes `nsubj:pass`, subject an agent `obl`).
//! * `D`: headline form: subject, verb and object with their adjectives, no
//!   determiners or punctuation.

use std::io::Write;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DocumentSample, Head, ParsedSentence, TokenRec};
use crate::error::{Error, Result};

pub const MAX_STYLES: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub samples: usize,
    pub styles: usize,
    pub nouns: usize,
    pub verbs: usize,
    pub adjectives: usize,
    pub adverbs: usize,
    pub distractors_min: usize,
    pub distractors_max: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            samples: 2000,
            styles: 2,
            nouns: 60,
            verbs: 30,
            adjectives: 30,
            adverbs: 15,
            distractors_min: 2,
            distractors_max: 5,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.samples < 1 {
            return bad("synthetic corpus needs at least 1 sample".into());
        }
        if !(2..=MAX_STYLES).contains(&self.styles) {
            return bad(format!(
                "styles must be between 2 and {MAX_STYLES}, got {}",
                self.styles
            ));
        }
        if self.nouns < 2 || self.verbs < 1 || self.adjectives < 1 || self.adverbs < 1 {
            return bad("vocabulary sizes must be positive (at least 2 nouns)".into());
        }
        if self.distractors_min < 1 || self.distractors_max < self.distractors_min {
            return bad("need 1 <= distractors_min <= distractors_max".into());
        }
        Ok(())
    }
}

pub fn style_label(style: usize) -> String {
    ((b'A' + style as u8) as char).to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub samples: Vec<DocumentSample>,
    /// Planted style label per sample, parallel to `samples`.
    pub labels: Vec<String>,
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

fn syllable(i: usize) -> String {
    let c = CONSONANTS[i % CONSONANTS.len()] as char;
    let v = VOWELS[(i / CONSONANTS.len()) % VOWELS.len()] as char;
    format!("{c}{v}")
}

fn pseudo_word(i: usize, suffix: &str) -> String {
    let n = CONSONANTS.len() * VOWELS.len();
    format!("{}{}{suffix}", syllable(i % n), syllable(i / n + i % 7))
}

struct Lexicon {
    nouns: Vec<String>,
    verbs: Vec<String>,
    adjectives: Vec<String>,
    adverbs: Vec<String>,
    names: Vec<String>,
    d_nouns: Vec<String>,
    d_verbs: Vec<String>,
    d_adjectives: Vec<String>,
}

impl Lexicon {
    fn new(cfg: &SynthConfig) -> Self {
        let words = |n: usize, suffix: &str| (0..n).map(|i| pseudo_word(i, suffix)).collect();
        let names = (0..cfg.nouns.max(8))
            .map(|i| {
                let w = pseudo_word(i, "son");
                let mut c = w.chars();
                let first = c.next().unwrap().to_ascii_uppercase();
                format!("{first}{}", c.as_str())
            })
            .collect();
        Self {
            nouns: words(cfg.nouns, "on"),
            verbs: words(cfg.verbs, "ed"),
            adjectives: words(cfg.adjectives, "ish"),
            adverbs: words(cfg.adverbs, "ly"),
            names,
            d_nouns: words(cfg.nouns, "um"),
            d_verbs: words(cfg.verbs, "es"),
            d_adjectives: words(cfg.adjectives, "ic"),
        }
    }
}

/// Tokens pushed in surface order; heads attached afterwards by index.
#[derive(Default)]
struct Builder {
    tokens: Vec<TokenRec>,
}

impl Builder {
    fn push(&mut self, form: &str, upos: &str, deprel: &str) -> usize {
        self.tokens.push(TokenRec::new(form, upos, Head::Root, deprel));
        self.tokens.len() - 1
    }

    fn attach(&mut self, dep: usize, head: usize) {
        self.tokens[dep].head = Head::Token(head);
    }

    fn build(self) -> ParsedSentence {
        let s = ParsedSentence::new(self.tokens);
        debug_assert_eq!(s.validate(), Ok(()));
        s
    }
}

fn pick<'a, R: Rng + ?Sized>(rng: &mut R, words: &'a [String]) -> &'a str {
    words.choose(rng).expect("non-empty word list")
}

fn noun_phrase<R: Rng + ?Sized>(
    b: &mut Builder,
    rng: &mut R,
    lex: &Lexicon,
    deprel: &str,
    n_adj: usize,
) -> usize {
    let det = b.push(if rng.random_bool(0.5) { "the" } else { "a" }, "DET", "det");
    let adjs: Vec<usize> = (0..n_adj)
        .map(|_| b.push(pick(rng, &lex.adjectives), "ADJ", "amod"))
        .collect();
    let noun = b.push(pick(rng, &lex.nouns), "NOUN", deprel);
    b.attach(det, noun);
    for a in adjs {
        b.attach(a, noun);
    }
    noun
}

fn oracle_sentence<R: Rng + ?Sized>(rng: &mut R, lex: &Lexicon) -> ParsedSentence {
    let mut adj_subj = rng.random_range(0..=2);
    let adj_obj = rng.random_range(0..=2);
    let with_adv = rng.random_bool(0.5);
    if adj_subj + adj_obj == 0 && !with_adv {
        adj_subj = 1;
    }
    let mut b = Builder::default();
    let subj = noun_phrase(&mut b, rng, lex, "nsubj", adj_subj);
    let adv = with_adv.then(|| b.push(pick(rng, &lex.adverbs), "ADV", "advmod"));
    let verb = b.push(pick(rng, &lex.verbs), "VERB", "root");
    let obj = noun_phrase(&mut b, rng, lex, "obj", adj_obj);
    b.attach(subj, verb);
    b.attach(obj, verb);
    if let Some(a) = adv {
        b.attach(a, verb);
    }
    if rng.random_bool(0.5) {
        const PREPS: [&str; 5] = ["in", "on", "at", "near", "with"];
        let adp = b.push(PREPS[rng.random_range(0..PREPS.len())], "ADP", "case");
        let pnoun = noun_phrase(&mut b, rng, lex, "obl", 0);
        b.attach(adp, pnoun);
        b.attach(pnoun, verb);
    }
    let p = b.push(".", "PUNCT", "punct");
    b.attach(p, verb);
    b.build()
}

fn distractor_sentence<R: Rng + ?Sized>(rng: &mut R, lex: &Lexicon) -> ParsedSentence {
    let mut b = Builder::default();
    match rng.random_range(0..4) {
        0 => {
            const PRONS: [&str; 3] = ["it", "they", "she"];
            let pron = b.push(PRONS[rng.random_range(0..3)], "PRON", "nsubj");
            let verb = b.push(pick(rng, &lex.d_verbs), "VERB", "root");
            b.attach(pron, verb);
        }
        1 => {
            let expl = b.push("there", "PRON", "expl");
            let verb = b.push(pick(rng, &lex.d_verbs), "VERB", "root");
            let noun = b.push(pick(rng, &lex.d_nouns), "NOUN", "nsubj");
            b.attach(expl, verb);
            b.attach(noun, verb);
        }
        2 => {
            let det = b.push("this", "DET", "det");
            let noun = b.push(pick(rng, &lex.d_nouns), "NOUN", "nsubj");
            let cop = b.push("seemed", "AUX", "cop");
            let adj = b.push(pick(rng, &lex.d_adjectives), "ADJ", "root");
            b.attach(det, noun);
            b.attach(noun, adj);
            b.attach(cop, adj);
        }
        _ => {
            let num = b.push(&rng.random_range(2..100).to_string(), "NUM", "nummod");
            let noun = b.push(pick(rng, &lex.d_nouns), "NOUN", "root");
            b.attach(num, noun);
        }
    }
    let root = b.tokens.iter().position(|t| t.head == Head::Root).unwrap();
    let p = b.push(".", "PUNCT", "punct");
    b.attach(p, root);
    b.build()
}

fn child(s: &ParsedSentence, head: usize, deprel: &str) -> Option<usize> {
    s.tokens
        .iter()
        .position(|t| t.head == Head::Token(head) && t.deprel == deprel)
}

fn children_with_upos(s: &ParsedSentence, head: usize, upos: &str) -> Vec<usize> {
    (0..s.len())
        .filter(|&i| s.tokens[i].head == Head::Token(head) && s.tokens[i].upos == upos)
        .collect()
}

/// Removes tokens matching `drop`, reattaching their dependents to the
/// removed token's head.
pub fn delete_tokens(s: &ParsedSentence, drop: impl Fn(&TokenRec) -> bool) -> ParsedSentence {
    let n = s.len();
    let keep: Vec<bool> = s.tokens.iter().map(|t| !drop(t)).collect();
    let mut new_index = vec![usize::MAX; n];
    let mut k = 0;
    for i in 0..n {
        if keep[i] {
            new_index[i] = k;
            k += 1;
        }
    }
    let resolve = |mut h: Head| loop {
        match h {
            Head::Root => return Head::Root,
            Head::Token(j) if keep[j] => return Head::Token(new_index[j]),
            Head::Token(j) => h = s.tokens[j].head,
        }
    };
    ParsedSentence::new(
        s.tokens
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(t, _)| TokenRec {
                head: resolve(t.head),
                ..t.clone()
            })
            .collect(),
    )
}

struct Core<'a> {
    subj: &'a TokenRec,
    subj_adjs: Vec<&'a TokenRec>,
    verb: &'a TokenRec,
    obj: &'a TokenRec,
    obj_adjs: Vec<&'a TokenRec>,
    obj_det: Option<&'a TokenRec>,
}

fn clause_core(s: &ParsedSentence) -> Core<'_> {
    let v = s.root().expect("oracle has a root");
    let subj = child(s, v, "nsubj").expect("oracle has a subject");
    let obj = child(s, v, "obj").expect("oracle has an object");
    let adjs = |h| children_with_upos(s, h, "ADJ").into_iter().map(|i| &s.tokens[i]).collect();
    Core {
        subj: &s.tokens[subj],
        subj_adjs: adjs(subj),
        verb: &s.tokens[v],
        obj: &s.tokens[obj],
        obj_adjs: adjs(obj),
        obj_det: child(s, obj, "det").map(|i| &s.tokens[i]),
    }
}

fn apply_style<R: Rng + ?Sized>(
    style: usize,
    oracle: &ParsedSentence,
    rng: &mut R,
    lex: &Lexicon,
) -> ParsedSentence {
    if style == 0 {
        return delete_tokens(oracle, |t| t.upos == "ADJ" || t.upos == "ADV");
    }
    let core = clause_core(oracle);
    let mut b = Builder::default();
    match style {
        1 => {
            let name = b.push(pick(rng, &lex.names), "PROPN", "nsubj");
            let said = b.push("said", "VERB", "root");
            let subj = b.push(&core.subj.form, "NOUN", "nsubj");
            let verb = b.push(&core.verb.form, "VERB", "ccomp");
            let obj = b.push(&core.obj.form, "NOUN", "obj");
            let p = b.push(".", "PUNCT", "punct");
            b.attach(name, said);
            b.attach(subj, verb);
            b.attach(verb, said);
            b.attach(obj, verb);
            b.attach(p, said);
        }
        2 => {
            let det = b.push(core.obj_det.map_or("the", |d| d.form.as_str()), "DET", "det");
            let obj = b.push(&core.obj.form, "NOUN", "nsubj:pass");
            let aux = b.push("was", "AUX", "aux:pass");
            let verb = b.push(&core.verb.form, "VERB", "root");
            let by = b.push("by", "ADP", "case");
            let subj = b.push(&core.subj.form, "NOUN", "obl");
            let p = b.push(".", "PUNCT", "punct");
            b.attach(det, obj);
            b.attach(obj, verb);
            b.attach(aux, verb);
            b.attach(by, subj);
            b.attach(subj, verb);
            b.attach(p, verb);
        }
        _ => {
            let sa: Vec<usize> = core
                .subj_adjs
                .iter()
                .map(|a| b.push(&a.form, "ADJ", "amod"))
                .collect();
            let subj = b.push(&core.subj.form, "NOUN", "nsubj");
            let verb = b.push(&core.verb.form, "VERB", "root");
            let oa: Vec<usize> = core
                .obj_adjs
                .iter()
                .map(|a| b.push(&a.form, "ADJ", "amod"))
                .collect();
            let obj = b.push(&core.obj.form, "NOUN", "obj");
            for a in sa {
                b.attach(a, subj);
            }
            for a in oa {
                b.attach(a, obj);
            }
            b.attach(subj, verb);
            b.attach(obj, verb);
        }
    }
    b.build()
}

/// Generates `cfg.samples` documents; sample `i` gets style `i % cfg.styles`.
pub fn generate_synthetic_corpus<R: Rng + ?Sized>(
    cfg: &SynthConfig,
    rng: &mut R,
) -> Result<SyntheticCorpus> {
    cfg.validate()?;
    let lex = Lexicon::new(cfg);
    let width = cfg.samples.to_string().len().max(5);
    let mut samples = Vec::with_capacity(cfg.samples);
    let mut labels = Vec::with_capacity(cfg.samples);
    for i in 0..cfg.samples {
        let style = i % cfg.styles;
        let oracle = oracle_sentence(rng, &lex);
        let summary = apply_style(style, &oracle, rng, &lex);
        let n_distractors = rng.random_range(cfg.distractors_min..=cfg.distractors_max);
        let position = rng.random_range(0..=n_distractors);
        let mut article: Vec<ParsedSentence> = (0..n_distractors)
            .map(|_| distractor_sentence(rng, &lex))
            .collect();
        article.insert(position, oracle);
        samples.push(DocumentSample {
            id: format!("s{i:0width$}"),
            article,
            summary: vec![summary],
        });
        labels.push(style_label(style));
    }
    Ok(SyntheticCorpus { samples, labels })
}

pub fn write_labels_csv<W: Write>(w: W, corpus: &SyntheticCorpus) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["sample_id", "style_label"])?;
    for (s, l) in corpus.samples.iter().zip(&corpus.labels) {
        out.write_record([s.id.as_str(), l.as_str()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_labels_csv(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Corrupt(format!(
                "{}: expected sample_id,style_label",
                path.display()
            )));
        }
        out.push((rec[0].to_string(), rec[1].to_string()));
    }
    Ok(out)
}
