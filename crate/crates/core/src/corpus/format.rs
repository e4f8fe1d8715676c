//! Line-delimited JSON corpus format.
//!
//! One document per line:
//!
//! ```text
//! {"id":"s1","article":[[{"form":"Dogs","upos":"NOUN","head":2,"deprel":"nsubj"}, ...]],"summary":[...]}
//! ```
//!
//! Heads are 1-based with `0` for ROOT.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Lines, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DocumentSample, Head, ParsedSentence, TokenRec};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct RawToken {
    form: String,
    upos: String,
    head: usize,
    deprel: String,
}

#[derive(Serialize, Deserialize)]
struct RawRecord {
    id: String,
    article: Vec<Vec<RawToken>>,
    summary: Vec<Vec<RawToken>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    /// 1-based line number.
    pub line: usize,
    pub id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub accepted: usize,
    pub rejects: Vec<Reject>,
}

impl LoadReport {
    pub fn summary(&self) -> String {
        format!(
            "{} accepted, {} rejected",
            self.accepted,
            self.rejects.len()
        )
    }
}

/// Streaming reader: yields accepted samples in file order, records rejects
/// in [`CorpusReader::report`], and stops with an error on a duplicate id.
pub struct CorpusReader<R> {
    lines: Lines<R>,
    line_no: usize,
    seen: HashSet<String>,
    report: LoadReport,
    done: bool,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            line_no: 0,
            seen: HashSet::new(),
            report: LoadReport::default(),
            done: false,
        }
    }

    pub fn report(&self) -> &LoadReport {
        &self.report
    }

    pub fn into_report(self) -> LoadReport {
        self.report
    }

    fn reject(&mut self, id: Option<String>, reason: String) {
        self.report.rejects.push(Reject {
            line: self.line_no,
            id,
            reason,
        });
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<DocumentSample>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawRecord = match serde_json::from_str(&line) {
                Ok(r) => r,
                Err(e) => {
                    self.reject(None, format!("malformed record: {e}"));
                    continue;
                }
            };
            if !self.seen.insert(raw.id.clone()) {
                self.done = true;
                return Some(Err(Error::DuplicateId(raw.id)));
            }
            let id = raw.id.clone();
            match convert(raw) {
                Ok(sample) => {
                    self.report.accepted += 1;
                    return Some(Ok(sample));
                }
                Err(reason) => self.reject(Some(id), reason),
            }
        }
    }
}

fn convert_sentence(raw: Vec<RawToken>) -> ParsedSentence {
    ParsedSentence::new(
        raw.into_iter()
            .map(|t| TokenRec {
                form: t.form,
                upos: t.upos,
                head: match t.head {
                    0 => Head::Root,
                    h => Head::Token(h - 1),
                },
                deprel: t.deprel,
            })
            .collect(),
    )
}

fn convert(raw: RawRecord) -> std::result::Result<DocumentSample, String> {
    let sample = DocumentSample {
        id: raw.id,
        article: raw.article.into_iter().map(convert_sentence).collect(),
        summary: raw.summary.into_iter().map(convert_sentence).collect(),
    };
    sample.validate()?;
    Ok(sample)
}

pub fn open_corpus(path: impl AsRef<Path>) -> Result<CorpusReader<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(CorpusReader::new(BufReader::new(file)))
}

/// Reads a whole corpus into memory.
pub fn load_parsed_corpus(path: impl AsRef<Path>) -> Result<(Vec<DocumentSample>, LoadReport)> {
    let mut reader = open_corpus(path)?;
    let mut samples = Vec::new();
    for s in reader.by_ref() {
        samples.push(s?);
    }
    Ok((samples, reader.into_report()))
}

fn raw_sentence(s: &ParsedSentence) -> Vec<RawToken> {
    s.tokens
        .iter()
        .map(|t| RawToken {
            form: t.form.clone(),
            upos: t.upos.clone(),
            head: match t.head {
                Head::Root => 0,
                Head::Token(h) => h + 1,
            },
            deprel: t.deprel.clone(),
        })
        .collect()
}

/// Serializes one sample as a single JSON line (without the newline).
pub fn record_line(sample: &DocumentSample) -> String {
    let raw = RawRecord {
        id: sample.id.clone(),
        article: sample.article.iter().map(raw_sentence).collect(),
        summary: sample.summary.iter().map(raw_sentence).collect(),
    };
    serde_json::to_string(&raw).expect("corpus records always serialize")
}

pub fn write_parsed_corpus<W: Write>(mut w: W, samples: &[DocumentSample]) -> Result<()> {
    for s in samples {
        writeln!(w, "{}", record_line(s))?;
    }
    w.flush()?;
    Ok(())
}
