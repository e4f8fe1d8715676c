use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{select_oracle, DocumentSample, ParsedSentence};
use crate::util::stable_u64;

/// Summary sentence (the "user"), its Jaccard oracle, and a random negative
/// article sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleTriplet {
    pub sample_id: String,
    pub user: ParsedSentence,
    pub oracle_idx: usize,
    pub negative_idx: usize,
    pub oracle_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    TooFewArticleSentences,
    EmptySummary,
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SkipReason::TooFewArticleSentences => "too few article sentences",
            SkipReason::EmptySummary => "empty summary",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TripletOutcome {
    Triplet(StyleTriplet),
    Skip(SkipReason),
}

/// Per-sample random source derived from the corpus seed and the sample id,
/// so extraction is independent of corpus order and thread scheduling.
pub fn sample_rng(corpus_seed: u64, sample_id: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stable_u64(corpus_seed, sample_id))
}

pub fn extract_triplet<R: Rng + ?Sized>(sample: &DocumentSample, rng: &mut R) -> TripletOutcome {
    let Some(user) = sample.summary.first() else {
        return TripletOutcome::Skip(SkipReason::EmptySummary);
    };
    let n = sample.article.len();
    if n < 2 {
        return TripletOutcome::Skip(SkipReason::TooFewArticleSentences);
    }
    let (oracle_idx, oracle_score) =
        select_oracle(user, &sample.article).expect("article has at least two sentences");
    let r = rng.random_range(0..n - 1);
    let negative_idx = if r >= oracle_idx { r + 1 } else { r };
    TripletOutcome::Triplet(StyleTriplet {
        sample_id: sample.id.clone(),
        user: user.clone(),
        oracle_idx,
        negative_idx,
        oracle_score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::flat;
    use crate::corpus::{jaccard, normalize_tokens};

    fn sample(article: Vec<ParsedSentence>, summary: Vec<ParsedSentence>) -> DocumentSample {
        DocumentSample {
            id: "doc".into(),
            article,
            summary,
        }
    }

    #[test]
    fn one_sentence_article_is_skipped() {
        let s = sample(vec![flat(&["a"])], vec![flat(&["a"])]);
        let out = extract_triplet(&s, &mut sample_rng(1, "doc"));
        assert_eq!(out, TripletOutcome::Skip(SkipReason::TooFewArticleSentences));
        assert_eq!(
            SkipReason::TooFewArticleSentences.to_string(),
            "too few article sentences"
        );
        let s = sample(vec![flat(&["a"]), flat(&["b"])], vec![]);
        assert_eq!(
            extract_triplet(&s, &mut sample_rng(1, "doc")),
            TripletOutcome::Skip(SkipReason::EmptySummary)
        );
    }

    #[test]
    fn two_sentence_article_has_forced_negative() {
        let s = sample(vec![flat(&["x", "y"]), flat(&["z"])], vec![flat(&["x", "y"])]);
        for seed in 0..20 {
            let TripletOutcome::Triplet(t) = extract_triplet(&s, &mut sample_rng(seed, "doc")) else {
                panic!("expected triplet")
            };
            assert_eq!((t.oracle_idx, t.negative_idx), (0, 1));
        }
    }

    #[test]
    fn seeded_extraction_is_reproducible() {
        let article: Vec<_> = (0..20).map(|i| flat(&[&format!("w{i}")])).collect();
        let s = sample(article, vec![flat(&["w7", "w7x"])]);
        let first = extract_triplet(&s, &mut sample_rng(42, "doc"));
        let second = extract_triplet(&s, &mut sample_rng(42, "doc"));
        assert_eq!(first, second);
        let TripletOutcome::Triplet(t) = first else { panic!() };
        assert_eq!(t.oracle_idx, 7);
        assert_ne!(t.negative_idx, t.oracle_idx);
        assert_eq!(
            t.oracle_score,
            jaccard(&normalize_tokens(&t.user), &normalize_tokens(&s.article[7]))
        );
        // Different seeds eventually produce different negatives.
        let negs: std::collections::BTreeSet<usize> = (0..50)
            .filter_map(|seed| match extract_triplet(&s, &mut sample_rng(seed, "doc")) {
                TripletOutcome::Triplet(t) => Some(t.negative_idx),
                _ => None,
            })
            .collect();
        assert!(negs.len() > 5);
        assert!(!negs.contains(&7));
    }

    #[test]
    fn negative_is_uniform_over_non_oracle() {
        let article: Vec<_> = (0..4).map(|i| flat(&[&format!("w{i}")])).collect();
        let s = sample(article, vec![flat(&["w2"])]);
        let mut rng = sample_rng(9, "doc");
        let mut counts = [0usize; 4];
        for _ in 0..30_000 {
            if let TripletOutcome::Triplet(t) = extract_triplet(&s, &mut rng) {
                counts[t.negative_idx] += 1;
            }
        }
        assert_eq!(counts[2], 0);
        for &c in &[counts[0], counts[1], counts[3]] {
            // Expected 10000, sd ≈ 81.6.
            assert!((c as f64 - 10_000.0).abs() < 4.0 * 81.65, "{counts:?}");
        }
    }
}
