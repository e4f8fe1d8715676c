use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use tracing::warn;

use super::{avg_jaccard_to_oracle, gleu, novel_ngram_ratio, oracle_hit, rouge_l, rouge_n};
use crate::corpus::{normalize_forms, normalize_tokens, DocumentSample, TokenSet};
use crate::error::{Error, Result};
use crate::par;
use crate::text::Tokenizer;

/// Generated summaries of one system, keyed by sample id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedRun {
    pub system: String,
    pub summaries: BTreeMap<String, Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct RunRecord {
    id: String,
    sentences: Vec<String>,
}

impl GeneratedRun {
    pub fn new(system: impl Into<String>) -> Self {
        Self {
            system: system.into(),
            summaries: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.summaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summaries.is_empty()
    }
}

/// Reads line-delimited `{"id", "sentences"}` records. Blank lines are
/// skipped; a repeated id is an error.
pub fn read_run(path: &Path, system: &str) -> Result<GeneratedRun> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut run = GeneratedRun::new(system);
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RunRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Corrupt(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if run.summaries.insert(rec.id.clone(), rec.sentences).is_some() {
            return Err(Error::DuplicateId(rec.id));
        }
    }
    Ok(run)
}

pub fn write_run(path: &Path, run: &GeneratedRun) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (id, sentences) in &run.summaries {
        let rec = RunRecord {
            id: id.clone(),
            sentences: sentences.clone(),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// The gold summaries as a run, one space-joined string per sentence.
pub fn gold_run(samples: &[DocumentSample]) -> GeneratedRun {
    GeneratedRun {
        system: "gold".into(),
        summaries: samples
            .iter()
            .map(|s| {
                let sents = s.summary.iter().map(|t| t.forms().collect::<Vec<_>>().join(" ")).collect();
                (s.id.clone(), sents)
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    pub tokenizer: Tokenizer,
    /// Minimum fraction of evaluated samples the run must cover.
    pub min_coverage: f64,
    pub per_sample: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            tokenizer: Tokenizer::default(),
            min_coverage: 1.0,
            per_sample: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Selector {
    #[serde(rename = "r1", alias = "rouge1")]
    Rouge1,
    #[default]
    #[serde(rename = "r2", alias = "rouge2")]
    Rouge2,
    #[serde(rename = "rl", alias = "rougel")]
    RougeL,
    #[serde(rename = "gleu")]
    Gleu,
}

impl Selector {
    pub fn value(self, s: &SampleScores) -> f64 {
        match self {
            Selector::Rouge1 => s.rouge1,
            Selector::Rouge2 => s.rouge2,
            Selector::RougeL => s.rouge_l,
            Selector::Gleu => s.gleu,
        }
    }
}

impl std::str::FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "r1" | "rouge1" | "rouge-1" => Ok(Selector::Rouge1),
            "r2" | "rouge2" | "rouge-2" => Ok(Selector::Rouge2),
            "rl" | "rougel" | "rouge-l" => Ok(Selector::RougeL),
            "gleu" => Ok(Selector::Gleu),
            _ => Err(Error::InvalidConfig(format!("unknown selector {s:?}"))),
        }
    }
}

/// Scores of one sample, all in [0, 1]. ROUGE values are F1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScores {
    pub id: String,
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
    pub gleu: f64,
    /// `None` when the summary has fewer tokens than n; averaged as 0.
    pub novel1: Option<f64>,
    pub novel2: Option<f64>,
    pub jaccard: f64,
    pub oracle_hit: bool,
}

/// Corpus means in [0, 1]. [`MetricReport::to_table`] scales by 100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub system: String,
    pub tokenization: String,
    pub n_samples: usize,
    pub missing: Vec<String>,
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
    pub gleu: f64,
    pub novel1: f64,
    pub novel2: f64,
    pub jaccard: f64,
    pub oracle_hit: f64,
    /// Samples whose summary was too short for the unigram or bigram ratio.
    pub short_summaries: usize,
    pub empty_summaries: usize,
    /// Reserved for scores computed by external tools.
    pub meteor: Option<f64>,
    pub bertscore: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<SampleScores>>,
}

impl MetricReport {
    pub fn to_table(&self) -> String {
        let pct = |v: f64| format!("{:.2}", 100.0 * v);
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), pct);
        let mut out = String::new();
        let _ = writeln!(out, "system: {}", self.system);
        let _ = writeln!(out, "samples: {} (missing {})", self.n_samples, self.missing.len());
        let _ = writeln!(out, "tokenization: {}", self.tokenization);
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<12}{:>8}", "metric", "value");
        for (name, v) in [
            ("ROUGE-1", pct(self.rouge1)),
            ("ROUGE-2", pct(self.rouge2)),
            ("ROUGE-L", pct(self.rouge_l)),
            ("GLEU", pct(self.gleu)),
            ("METEOR", opt(self.meteor)),
            ("BERTScore", opt(self.bertscore)),
            ("N1", pct(self.novel1)),
            ("N2", pct(self.novel2)),
            ("JS", pct(self.jaccard)),
            ("OracleHit", pct(self.oracle_hit)),
        ] {
            let _ = writeln!(out, "{name:<12}{v:>8}");
        }
        if self.short_summaries + self.empty_summaries > 0 {
            let _ = writeln!(
                out,
                "\nshort summaries: {}, empty summaries: {}",
                self.short_summaries, self.empty_summaries
            );
        }
        out
    }
}

fn token_sentences<'a>(tok: &Tokenizer, sents: impl IntoIterator<Item = &'a str>) -> Vec<Vec<String>> {
    sents.into_iter().map(|s| tok.tokenize(s)).collect()
}

pub(super) fn score_sample(sample: &DocumentSample, generated: &[String], tok: &Tokenizer) -> SampleScores {
    let gold: Vec<Vec<String>> = sample.summary.iter().map(|s| tok.tokens(s.forms())).collect();
    let article: Vec<Vec<String>> = sample.article.iter().map(|s| tok.tokens(s.forms())).collect();
    let cand = token_sentences(tok, generated.iter().map(String::as_str));
    let article_sets: Vec<TokenSet> = sample.article.iter().map(normalize_tokens).collect();
    let cand_sets: Vec<TokenSet> = generated.iter().map(|s| normalize_forms(s.split_whitespace())).collect();
    let gold_first = sample.summary.first().map(normalize_tokens).unwrap_or_default();
    SampleScores {
        id: sample.id.clone(),
        rouge1: rouge_n(&cand, &gold, 1).f1,
        rouge2: rouge_n(&cand, &gold, 2).f1,
        rouge_l: rouge_l(&cand, &gold).f1,
        gleu: gleu(&cand, &gold, 4),
        novel1: novel_ngram_ratio(&cand, &article, 1),
        novel2: novel_ngram_ratio(&cand, &article, 2),
        jaccard: avg_jaccard_to_oracle(&cand_sets, &article_sets),
        oracle_hit: oracle_hit(&gold_first, cand_sets.first(), &article_sets),
    }
}

/// Scores `run` on `samples`. Ids in the run but not in `samples` are ignored.
pub fn evaluate_run(run: &GeneratedRun, samples: &[DocumentSample], opts: &EvalOptions) -> Result<MetricReport> {
    if samples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let (covered, missing): (Vec<&DocumentSample>, Vec<&DocumentSample>) =
        samples.iter().partition(|s| run.summaries.contains_key(&s.id));
    let missing: Vec<String> = missing.into_iter().map(|s| s.id.clone()).collect();
    let coverage = covered.len() as f64 / samples.len() as f64;
    if covered.is_empty() || coverage < opts.min_coverage {
        return Err(Error::Coverage {
            covered: covered.len(),
            total: samples.len(),
            threshold: opts.min_coverage,
            missing,
        });
    }
    if !missing.is_empty() {
        warn!(system = %run.system, missing = missing.len(), "run does not cover every sample");
    }
    let scores = par::map(&covered, |s| score_sample(s, &run.summaries[&s.id], &opts.tokenizer));
    let mut report = aggregate(&run.system, &opts.tokenizer, &scores, missing);
    report.empty_summaries = covered
        .iter()
        .filter(|s| run.summaries[&s.id].iter().all(|t| t.trim().is_empty()))
        .count();
    if opts.per_sample {
        report.samples = Some(scores);
    }
    Ok(report)
}

fn aggregate(system: &str, tok: &Tokenizer, scores: &[SampleScores], missing: Vec<String>) -> MetricReport {
    let n = scores.len() as f64;
    let mean = |f: &dyn Fn(&SampleScores) -> f64| scores.iter().map(f).sum::<f64>() / n;
    let short = scores.iter().filter(|s| s.novel1.is_none() || s.novel2.is_none()).count();
    if short > 0 {
        warn!(system, short, "summaries too short for novel n-gram ratios; counted as 0");
    }
    MetricReport {
        system: system.to_string(),
        tokenization: tok.describe(),
        n_samples: scores.len(),
        missing,
        rouge1: mean(&|s| s.rouge1),
        rouge2: mean(&|s| s.rouge2),
        rouge_l: mean(&|s| s.rouge_l),
        gleu: mean(&|s| s.gleu),
        novel1: mean(&|s| s.novel1.unwrap_or(0.0)),
        novel2: mean(&|s| s.novel2.unwrap_or(0.0)),
        jaccard: mean(&|s| s.jaccard),
        oracle_hit: mean(&|s| f64::from(u8::from(s.oracle_hit))),
        short_summaries: short,
        empty_summaries: 0,
        meteor: None,
        bertscore: None,
        samples: None,
    }
}

#[derive(Debug, Clone)]
pub struct ClusterBest {
    pub run: GeneratedRun,
    pub report: MetricReport,
    /// Per selected sample, the index of the winning run.
    pub choices: BTreeMap<String, usize>,
    /// (run, id) pairs skipped because the run lacked the id.
    pub skipped: usize,
}

/// Per sample, keeps the summary of the run that scores highest under
/// `selector`; ties go to the earliest run.
pub fn cluster_best(
    runs: &[GeneratedRun],
    samples: &[DocumentSample],
    selector: Selector,
    opts: &EvalOptions,
) -> Result<ClusterBest> {
    if runs.len() < 2 {
        return Err(Error::InvalidConfig(format!("cluster_best needs at least 2 runs, got {}", runs.len())));
    }
    let picks = par::map(samples, |s| {
        let mut best: Option<(usize, f64)> = None;
        let mut skipped = 0;
        for (r, run) in runs.iter().enumerate() {
            let Some(gen) = run.summaries.get(&s.id) else {
                skipped += 1;
                continue;
            };
            let v = selector.value(&score_sample(s, gen, &opts.tokenizer));
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((r, v));
            }
        }
        (best.map(|(r, _)| r), skipped)
    });
    let mut out = GeneratedRun::new("cluster_best");
    let mut choices = BTreeMap::new();
    let mut skipped = 0;
    for (s, (pick, sk)) in samples.iter().zip(picks) {
        skipped += sk;
        if let Some(r) = pick {
            out.summaries.insert(s.id.clone(), runs[r].summaries[&s.id].clone());
            choices.insert(s.id.clone(), r);
        }
    }
    if skipped > 0 {
        warn!(skipped, "runs missing some samples were skipped for those samples");
    }
    let report = evaluate_run(&out, samples, opts)?;
    Ok(ClusterBest {
        run: out,
        report,
        choices,
        skipped,
    })
}

/// Winning-run counts, for reporting how often each cluster model is chosen.
pub fn choice_counts(best: &ClusterBest, n_runs: usize) -> Vec<usize> {
    let mut counts = vec![0; n_runs];
    for &r in best.choices.values() {
        counts[r] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::corpus::fixtures::flat;
    use crate::corpus::select_oracle;
    use crate::corpus::synth::{generate_synthetic_corpus, SynthConfig};

    fn corpus(n: usize, seed: u64) -> Vec<DocumentSample> {
        let cfg = SynthConfig {
            samples: n,
            ..SynthConfig::default()
        };
        generate_synthetic_corpus(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap().samples
    }

    fn joined(s: &crate::corpus::ParsedSentence) -> String {
        s.forms().collect::<Vec<_>>().join(" ")
    }

    fn run_of(name: &str, samples: &[DocumentSample], mut f: impl FnMut(&DocumentSample) -> Vec<String>) -> GeneratedRun {
        GeneratedRun {
            system: name.into(),
            summaries: samples.iter().map(|s| (s.id.clone(), f(s))).collect(),
        }
    }

    #[test]
    fn gold_against_gold() {
        let samples = corpus(40, 1);
        let r = evaluate_run(&gold_run(&samples), &samples, &EvalOptions::default()).unwrap();
        assert_eq!((r.rouge1, r.rouge2, r.rouge_l, r.gleu, r.oracle_hit), (1.0, 1.0, 1.0, 1.0, 1.0));
        // the article-related profile equals the gold corpus's own
        let js: f64 = samples
            .iter()
            .map(|s| {
                let per: f64 = s.summary.iter().map(|t| select_oracle(t, &s.article).unwrap().1).sum();
                per / s.summary.len() as f64
            })
            .sum::<f64>()
            / samples.len() as f64;
        assert!((r.jaccard - js).abs() < 1e-12);
        assert!(r.novel1 > 0.0 && r.novel2 > r.novel1);
    }

    #[test]
    fn extractive_first_sentence() {
        let samples = corpus(30, 2);
        let run = run_of("lead", &samples, |s| vec![joined(&s.article[0])]);
        let r = evaluate_run(&run, &samples, &EvalOptions::default()).unwrap();
        assert_eq!((r.novel1, r.novel2, r.jaccard), (0.0, 0.0, 1.0));
    }

    fn tiny(id: &str) -> DocumentSample {
        DocumentSample {
            id: id.into(),
            article: vec![flat(&["a", "b", "c"]), flat(&["x", "y", "z"])],
            summary: vec![flat(&["a", "b"])],
        }
    }

    #[test]
    fn hits_and_empty_summaries() {
        let samples: Vec<_> = ["p", "q", "r", "s"].into_iter().map(tiny).collect();
        let mut run = run_of("r", &samples, |_| vec!["a c".to_string()]);
        run.summaries.insert("s".into(), vec![]);
        let r = evaluate_run(&run, &samples, &EvalOptions::default()).unwrap();
        assert_eq!(r.oracle_hit, 0.75);
        assert_eq!(r.empty_summaries, 1);
        assert_eq!(r.short_summaries, 1);
        run.summaries.insert("s".into(), vec!["y z".into()]);
        let r = evaluate_run(&run, &samples, &EvalOptions::default()).unwrap();
        assert_eq!(r.oracle_hit, 0.75);
        assert_eq!(r.empty_summaries, 0);
    }

    #[test]
    fn coverage_threshold() {
        let samples: Vec<_> = ["p", "q", "r", "s"].into_iter().map(tiny).collect();
        let mut run = run_of("r", &samples, |_| vec!["a b".to_string()]);
        run.summaries.remove("q");
        run.summaries.insert("extra".into(), vec!["zzz".into()]);
        match evaluate_run(&run, &samples, &EvalOptions::default()) {
            Err(Error::Coverage { covered, missing, .. }) => {
                assert_eq!(covered, 3);
                assert_eq!(missing, vec!["q".to_string()]);
            }
            other => panic!("{other:?}"),
        }
        let opts = EvalOptions {
            min_coverage: 0.75,
            ..EvalOptions::default()
        };
        let r = evaluate_run(&run, &samples, &opts).unwrap();
        assert_eq!((r.n_samples, r.missing.clone(), r.rouge1), (3, vec!["q".to_string()], 1.0));
    }

    #[test]
    fn case_folding_invariance() {
        let samples = corpus(20, 3);
        let lower = run_of("x", &samples, |s| vec![joined(&s.article[0]), joined(&s.summary[0])]);
        let upper = run_of("x", &samples, |s| lower.summaries[&s.id].iter().map(|t| t.to_uppercase()).collect());
        let opts = EvalOptions::default();
        assert_eq!(evaluate_run(&lower, &samples, &opts).unwrap(), evaluate_run(&upper, &samples, &opts).unwrap());
        let cased = EvalOptions {
            tokenizer: Tokenizer {
                lowercase: false,
                drop_punct: true,
            },
            ..opts
        };
        assert!(evaluate_run(&upper, &samples, &cased).unwrap().rouge1 < 1e-12);
    }

    #[test]
    fn run_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        let samples = corpus(5, 4);
        let run = gold_run(&samples);
        write_run(&path, &run).unwrap();
        assert_eq!(read_run(&path, "gold").unwrap(), run);
        std::fs::write(&path, "{\"id\":\"a\",\"sentences\":[]}\n\n{\"id\":\"a\",\"sentences\":[\"x\"]}\n").unwrap();
        assert!(matches!(read_run(&path, "x"), Err(Error::DuplicateId(id)) if id == "a"));
        std::fs::write(&path, "{\"id\":1}\n").unwrap();
        assert!(matches!(read_run(&path, "x"), Err(Error::Corrupt(_))));
    }

    #[test]
    fn report_table_scales() {
        let samples = corpus(5, 5);
        let r = evaluate_run(&gold_run(&samples), &samples, &EvalOptions::default()).unwrap();
        let t = r.to_table();
        assert!(t.contains("ROUGE-2       100.00"), "{t}");
        assert!(t.contains("METEOR             -"), "{t}");
        assert!(t.contains("lowercase=true"));
    }

    #[test]
    fn cluster_best_identical_and_dominant() {
        let samples = corpus(20, 6);
        let lead = run_of("lead", &samples, |s| vec![joined(&s.article[0])]);
        let opts = EvalOptions::default();
        let same = cluster_best(&[lead.clone(), lead.clone()], &samples, Selector::default(), &opts).unwrap();
        assert_eq!(same.run.summaries, lead.summaries);
        assert!(same.choices.values().all(|&r| r == 0));

        let best = cluster_best(&[lead.clone(), gold_run(&samples)], &samples, Selector::Rouge2, &opts).unwrap();
        assert_eq!(best.report.rouge2, 1.0);
        let counts = choice_counts(&best, 2);
        assert_eq!(counts.iter().sum::<usize>(), samples.len());
        assert!(counts[1] > 0);
        assert!(matches!(
            cluster_best(&[lead], &samples, Selector::Rouge2, &opts),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn cluster_best_skips_missing_ids() {
        let samples: Vec<_> = ["p", "q"].into_iter().map(tiny).collect();
        let mut a = run_of("a", &samples, |_| vec!["a b".to_string()]);
        let b = run_of("b", &samples, |_| vec!["x".to_string()]);
        a.summaries.remove("q");
        let best = cluster_best(&[a, b], &samples, Selector::Rouge1, &EvalOptions::default()).unwrap();
        assert_eq!(best.skipped, 1);
        assert_eq!(best.choices, BTreeMap::from([("p".to_string(), 0), ("q".to_string(), 1)]));
    }

    /// Random runs that mix words from the article and gold summary.
    fn noisy_run(name: &str, samples: &[DocumentSample], rng: &mut ChaCha8Rng) -> GeneratedRun {
        run_of(name, samples, |s| {
            let pool: Vec<&str> = s.summary.iter().chain(&s.article).flat_map(|t| t.forms()).collect();
            let len = rng.random_range(3..9);
            let words: Vec<&str> = (0..len).map(|_| pool[rng.random_range(0..pool.len())]).collect();
            vec![words.join(" ")]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn cluster_best_dominates(seed in any::<u64>(), n_runs in 2usize..4) {
            let samples = corpus(12, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let runs: Vec<GeneratedRun> = (0..n_runs).map(|i| noisy_run(&format!("r{i}"), &samples, &mut rng)).collect();
            let opts = EvalOptions { per_sample: true, ..EvalOptions::default() };
            let best = cluster_best(&runs, &samples, Selector::Rouge2, &opts).unwrap();
            let best_scores = best.report.samples.clone().unwrap();
            let mut max_mean: f64 = 0.0;
            for run in &runs {
                let r = evaluate_run(run, &samples, &opts).unwrap();
                max_mean = max_mean.max(r.rouge2);
                for (b, s) in best_scores.iter().zip(r.samples.unwrap()) {
                    prop_assert!(b.rouge2 >= s.rouge2);
                }
            }
            prop_assert!(best.report.rouge2 >= max_mean - 1e-12);
        }
    }
}
