use std::collections::BTreeSet;

use super::ParsedSentence;
use crate::text::Tokenizer;

/// Normalized token set: lowercased, punctuation-only tokens removed.
pub type TokenSet = BTreeSet<String>;

pub fn normalize_forms<'a>(forms: impl IntoIterator<Item = &'a str>) -> TokenSet {
    Tokenizer::default().tokens(forms).into_iter().collect()
}

pub fn normalize_tokens(s: &ParsedSentence) -> TokenSet {
    normalize_forms(s.forms())
}

/// |a ∩ b| / |a ∪ b|, or 0 when both are empty.
pub fn jaccard(a: &TokenSet, b: &TokenSet) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Index and score of the most Jaccard-similar candidate; ties go to the
/// lowest index. `None` for an empty candidate list.
pub fn select_oracle_sets(user: &TokenSet, article: &[TokenSet]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in article.iter().enumerate() {
        let score = jaccard(user, s);
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((i, score));
        }
    }
    best
}

pub fn select_oracle(user: &ParsedSentence, article: &[ParsedSentence]) -> Option<(usize, f64)> {
    let sets: Vec<TokenSet> = article.iter().map(normalize_tokens).collect();
    select_oracle_sets(&normalize_tokens(user), &sets)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::corpus::fixtures::flat;

    fn set(words: &[&str]) -> TokenSet {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn normalization_rules() {
        assert_eq!(normalize_tokens(&flat(&["The", "cat", "."])), set(&["the", "cat"]));
        assert_eq!(normalize_tokens(&flat(&["A", "a"])), set(&["a"]));
        assert!(normalize_tokens(&flat(&[".", ",", "!"])).is_empty());
    }

    #[test]
    fn jaccard_fixtures() {
        assert_eq!(jaccard(&set(&["x", "y"]), &set(&["x", "y"])), 1.0);
        assert_eq!(jaccard(&set(&["x"]), &set(&["y"])), 0.0);
        assert_eq!(
            jaccard(&set(&["the", "cat", "sat"]), &set(&["the", "cat", "ran"])),
            0.5
        );
        assert_eq!(jaccard(&set(&[]), &set(&[])), 0.0);
    }

    #[test]
    fn oracle_identity_and_tie_break() {
        let user = flat(&["dogs", "bark"]);
        assert_eq!(
            select_oracle(&user, &[user.clone(), flat(&["cats", "purr"])]),
            Some((0, 1.0))
        );
        assert_eq!(
            select_oracle(&user, &[flat(&["a"]), flat(&["b"]), flat(&["c"])]),
            Some((0, 0.0))
        );
        assert_eq!(select_oracle(&user, &[]), None);
    }

    #[test]
    fn ten_sentence_article() {
        // user {a,b,c,d}; sentence 6 is {a,b,c,e}: 3 shared / 5 in union.
        let user = flat(&["a", "b", "c", "d"]);
        let mut article: Vec<_> = (0..10)
            .map(|i| flat(&["a", &format!("filler{i}"), &format!("more{i}")]))
            .collect();
        article[6] = flat(&["a", "b", "c", "e"]);
        let (idx, score) = select_oracle(&user, &article).unwrap();

        // Exhaustive scan as the oracle.
        let u = normalize_tokens(&user);
        let scores: Vec<f64> = article.iter().map(|s| jaccard(&u, &normalize_tokens(s))).collect();
        let max = scores.iter().cloned().fold(f64::MIN, f64::max);
        let expect = scores.iter().position(|&s| s == max).unwrap();
        assert_eq!((idx, score), (expect, max));
        assert_eq!(idx, 6);
        assert!((score - 0.6).abs() < 1e-12);
    }

    fn small_set() -> impl Strategy<Value = TokenSet> {
        proptest::collection::btree_set("[a-f]", 0..6)
    }

    proptest! {
        #[test]
        fn jaccard_properties(a in small_set(), b in small_set()) {
            let j = jaccard(&a, &b);
            prop_assert!((0.0..=1.0).contains(&j));
            prop_assert_eq!(j, jaccard(&b, &a));
            if !a.is_empty() {
                prop_assert_eq!(j == 1.0, a == b);
            }
            prop_assert_eq!(j == 0.0, a.is_disjoint(&b) || (a.is_empty() && b.is_empty()));
        }

        #[test]
        fn oracle_stable_under_worse_appends(
            user in small_set(),
            article in proptest::collection::vec(small_set(), 1..6),
            extra in proptest::collection::vec(small_set(), 0..4),
        ) {
            let (idx, score) = select_oracle_sets(&user, &article).unwrap();
            let mut longer = article.clone();
            longer.extend(extra.into_iter().filter(|s| jaccard(&user, s) < score));
            prop_assert_eq!(select_oracle_sets(&user, &longer), Some((idx, score)));
        }
    }
}
