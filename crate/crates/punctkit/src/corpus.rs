//! Corpus construction: normalization, excerpt splitting, the depunctuation
//! transform, and deterministic split partitioning.
//!
//! The transform direction is target → source: targets keep their original
//! punctuation and casing, sources have the four marks `{ , . ' " }` removed
//! and are lowercased. Everything here is a pure function; only [`partition`]
//! consumes a seed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The four punctuation marks removed from source text.
pub const STRIPPED_MARKS: [char; 4] = [',', '.', '\'', '"'];

/// Default excerpt size in whitespace-separated words.
pub const DEFAULT_WORD_LIMIT: usize = 150;

/// A raw input document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
}

/// A word-limited slice of a document; the `target` side before pairing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Excerpt {
    pub id: String,
    pub target: String,
    pub word_count: usize,
}

/// A (source, target) training pair. Invariant: `depunctuate(target) == source`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub id: String,
    pub source: String,
    pub target: String,
}

impl Pair {
    /// Checks the pair invariant.
    pub fn is_valid(&self) -> bool {
        depunctuate(&self.target) == self.source
    }
}

/// Disjoint train/dev/test splits produced by [`partition`].
#[derive(Debug, Clone)]
pub struct CorpusSplits {
    pub train: Vec<Pair>,
    pub dev: Vec<Pair>,
    pub test: Vec<Pair>,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(
        "not enough pairs to partition: have {have}, need more than {} (dev {dev} + test {test})",
        dev + test
    )]
    InsufficientPairs { have: usize, dev: usize, test: usize },
}

/// Result of [`build_pairs`]: the surviving pairs plus how many excerpts were
/// dropped because their source became empty.
#[derive(Debug, Clone)]
pub struct BuildOutcome {
    pub pairs: Vec<Pair>,
    pub dropped: usize,
}

/// True for the four marks the objective restores.
#[inline]
pub fn is_stripped_mark(c: char) -> bool {
    matches!(c, ',' | '.' | '\'' | '"')
}

/// Canonicalizes quote variants and the horizontal ellipsis so that the four
/// target marks are in their ASCII forms before stripping. Idempotent; all
/// other characters pass through unchanged.
pub fn normalize_punctuation(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\u{2018}' | '\u{2019}' | '\u{02BC}' => out.push('\''),
            '\u{201C}' | '\u{201D}' | '\u{00AB}' | '\u{00BB}' => out.push('"'),
            '\u{2026}' => out.push_str("..."),
            _ => out.push(c),
        }
    }
    out
}

/// Splits a document into consecutive excerpts of at most `limit`
/// whitespace-separated words. Every excerpt except possibly the last has
/// exactly `limit` words; excerpt text is the tokens re-joined with single
/// spaces. An empty document yields no excerpts.
///
/// `limit` must be at least 1.
pub fn split_excerpts(doc: &Document, limit: usize) -> Vec<Excerpt> {
    assert!(limit >= 1, "excerpt word limit must be >= 1");
    let tokens: Vec<&str> = doc.text.split_whitespace().collect();
    tokens
        .chunks(limit)
        .enumerate()
        .map(|(k, chunk)| Excerpt {
            id: format!("{}-{}", doc.id, k),
            target: chunk.join(" "),
            word_count: chunk.len(),
        })
        .collect()
}

/// Strips the four marks from a single token and lowercases the remainder.
/// Returns an empty string for tokens made of marks only.
pub fn strip_token(token: &str) -> String {
    let demarked: String = token.chars().filter(|c| !is_stripped_mark(*c)).collect();
    demarked.to_lowercase()
}

/// The source-construction transform: per whitespace token, remove
/// `{ , . ' " }` and lowercase; tokens that become empty are deleted and the
/// survivors are joined with single spaces. Total and idempotent.
pub fn depunctuate(target: &str) -> String {
    let mut out = String::with_capacity(target.len());
    for token in target.split_whitespace() {
        let stripped = strip_token(token);
        if stripped.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&stripped);
    }
    out
}

/// Builds pairs from documents: split into excerpts, normalize punctuation to
/// get the target, depunctuate to get the source. Excerpts whose source comes
/// out empty are dropped and counted.
pub fn build_pairs(docs: &[Document], limit: usize) -> BuildOutcome {
    let per_doc: Vec<(Vec<Pair>, usize)> = docs
        .par_iter()
        .map(|doc| {
            let mut pairs = Vec::new();
            let mut dropped = 0usize;
            for excerpt in split_excerpts(doc, limit) {
                let target = normalize_punctuation(&excerpt.target);
                let source = depunctuate(&target);
                if source.is_empty() {
                    dropped += 1;
                    continue;
                }
                pairs.push(Pair {
                    id: excerpt.id,
                    source,
                    target,
                });
            }
            (pairs, dropped)
        })
        .collect();

    let mut pairs = Vec::new();
    let mut dropped = 0usize;
    for (p, d) in per_doc {
        pairs.extend(p);
        dropped += d;
    }
    BuildOutcome { pairs, dropped }
}

/// Deterministically shuffles `pairs` under `seed` and slices off the first
/// `dev_n` as dev and the next `test_n` as test; the remainder (which must be
/// non-empty) becomes train. The same seed over the same input order always
/// yields identical splits.
pub fn partition(
    pairs: Vec<Pair>,
    dev_n: usize,
    test_n: usize,
    seed: u64,
) -> Result<CorpusSplits, CorpusError> {
    if pairs.len() <= dev_n + test_n {
        return Err(CorpusError::InsufficientPairs {
            have: pairs.len(),
            dev: dev_n,
            test: test_n,
        });
    }
    let mut shuffled = pairs;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let mut rest = shuffled.into_iter();
    let dev: Vec<Pair> = rest.by_ref().take(dev_n).collect();
    let test: Vec<Pair> = rest.by_ref().take(test_n).collect();
    let train: Vec<Pair> = rest.collect();
    Ok(CorpusSplits {
        train,
        dev,
        test,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(id: &str, text: &str) -> Document {
        Document {
            id: id.to_string(),
            text: text.to_string(),
        }
    }

    const FAKER_TARGET: &str = "Lee \"Faker\" Sang-hyeok (Hangul: 이상혁) is a League of Legends esports player, currently mid laner and part owner at T1.";
    const FAKER_SOURCE: &str = "lee faker sang-hyeok (hangul: 이상혁) is a league of legends esports player currently mid laner and part owner at t1";

    #[test]
    fn normalize_maps_quote_variants() {
        assert_eq!(normalize_punctuation("\u{201C}Faker\u{201D}"), "\"Faker\"");
        assert_eq!(normalize_punctuation("don\u{2019}t"), "don't");
        assert_eq!(normalize_punctuation("abc"), "abc");
        assert_eq!(normalize_punctuation("\u{00AB}x\u{00BB}"), "\"x\"");
        assert_eq!(normalize_punctuation("\u{02BC}"), "'");
        assert_eq!(normalize_punctuation("wait\u{2026}"), "wait...");
    }

    #[test]
    fn normalize_is_idempotent_on_mapped_text() {
        let once = normalize_punctuation("\u{201C}don\u{2019}t\u{2026}\u{201D}");
        assert_eq!(normalize_punctuation(&once), once);
    }

    #[test]
    fn split_partitions_by_word_count() {
        let words: Vec<String> = (0..437).map(|i| format!("w{i}")).collect();
        let d = doc("a", &words.join(" "));
        let excerpts = split_excerpts(&d, 150);
        assert_eq!(excerpts.len(), 3);
        assert_eq!(
            excerpts.iter().map(|e| e.word_count).collect::<Vec<_>>(),
            vec![150, 150, 137]
        );
        // token conservation
        let rejoined: Vec<String> = excerpts
            .iter()
            .flat_map(|e| e.target.split_whitespace().map(str::to_string))
            .collect();
        assert_eq!(rejoined, words);
    }

    #[test]
    fn split_exact_limit_is_one_excerpt() {
        let words: Vec<String> = (0..150).map(|i| format!("w{i}")).collect();
        let d = doc("a", &words.join(" "));
        let excerpts = split_excerpts(&d, 150);
        assert_eq!(excerpts.len(), 1);
        assert_eq!(excerpts[0].word_count, 150);
    }

    #[test]
    fn split_empty_document_is_empty() {
        assert!(split_excerpts(&doc("a", ""), 150).is_empty());
        assert!(split_excerpts(&doc("a", "   \n\t "), 150).is_empty());
    }

    #[test]
    fn depunctuate_matches_worked_example() {
        assert_eq!(depunctuate(FAKER_TARGET), FAKER_SOURCE);
    }

    #[test]
    fn depunctuate_identity_on_clean_text() {
        assert_eq!(depunctuate("hello"), "hello");
    }

    #[test]
    fn depunctuate_deletes_emptied_tokens() {
        // "Don't." loses its quote-mate token entirely: ["He, said,, "Don't.""]
        assert_eq!(depunctuate("He said, \"Don't.\""), "he said dont");
        // A token of marks only disappears and whitespace collapses.
        assert_eq!(depunctuate("a ... b"), "a b");
        assert_eq!(depunctuate("..."), "");
    }

    #[test]
    fn depunctuate_leaves_other_punctuation() {
        assert_eq!(depunctuate("(Hangul: 이상혁)"), "(hangul: 이상혁)");
        assert_eq!(depunctuate("re-use; x"), "re-use; x");
    }

    #[test]
    fn build_pairs_faker_excerpt() {
        let out = build_pairs(&[doc("faker", FAKER_TARGET)], 150);
        assert_eq!(out.dropped, 0);
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.pairs[0].source, FAKER_SOURCE);
        assert_eq!(out.pairs[0].target, FAKER_TARGET);
        assert!(out.pairs[0].is_valid());
    }

    #[test]
    fn build_pairs_drops_mark_only_excerpts() {
        let out = build_pairs(&[doc("dots", "...")], 150);
        assert!(out.pairs.is_empty());
        assert_eq!(out.dropped, 1);
    }

    #[test]
    fn build_pairs_assigns_distinct_ids() {
        let out = build_pairs(&[doc("a", "One sentence."), doc("b", "Another one.")], 150);
        assert_eq!(out.pairs.len(), 2);
        assert_ne!(out.pairs[0].id, out.pairs[1].id);
    }

    #[test]
    fn build_pairs_normalizes_before_stripping() {
        let out = build_pairs(&[doc("q", "\u{201C}Quoted\u{201D} words")], 150);
        assert_eq!(out.pairs[0].target, "\"Quoted\" words");
        assert_eq!(out.pairs[0].source, "quoted words");
    }

    fn tiny_pairs(n: usize) -> Vec<Pair> {
        (0..n)
            .map(|i| Pair {
                id: format!("p{i}"),
                source: "w".to_string(),
                target: "w".to_string(),
            })
            .collect()
    }

    #[test]
    fn partition_is_deterministic() {
        let a = partition(tiny_pairs(10), 2, 3, 7).unwrap();
        let b = partition(tiny_pairs(10), 2, 3, 7).unwrap();
        assert_eq!(a.dev, b.dev);
        assert_eq!(a.test, b.test);
        assert_eq!(a.train, b.train);
        assert_eq!(a.dev.len(), 2);
        assert_eq!(a.test.len(), 3);
        assert_eq!(a.train.len(), 5);
    }

    #[test]
    fn partition_differs_across_seeds() {
        let a = partition(tiny_pairs(100), 20, 20, 1).unwrap();
        let b = partition(tiny_pairs(100), 20, 20, 2).unwrap();
        let ids = |pairs: &[Pair]| pairs.iter().map(|p| p.id.clone()).collect::<Vec<_>>();
        assert_ne!(ids(&a.dev), ids(&b.dev));
    }

    #[test]
    fn partition_splits_are_disjoint_by_id() {
        let splits = partition(tiny_pairs(50), 10, 10, 3).unwrap();
        let mut seen = std::collections::HashSet::new();
        for p in splits
            .train
            .iter()
            .chain(splits.dev.iter())
            .chain(splits.test.iter())
        {
            assert!(seen.insert(p.id.clone()), "duplicate id {}", p.id);
        }
        assert_eq!(seen.len(), 50);
    }

    #[test]
    fn partition_rejects_insufficient_pairs() {
        let err = partition(tiny_pairs(5), 3, 3, 0).unwrap_err();
        assert!(matches!(
            err,
            CorpusError::InsufficientPairs { have: 5, dev: 3, test: 3 }
        ));
        // Exactly dev+test leaves no training data, also an error.
        assert!(partition(tiny_pairs(6), 3, 3, 0).is_err());
    }

    #[test]
    fn partition_reference_sizes() {
        let splits = partition(tiny_pairs(437_031), 1000, 1000, 42).unwrap();
        assert_eq!(splits.dev.len(), 1000);
        assert_eq!(splits.test.len(), 1000);
        assert_eq!(splits.train.len(), 435_031);
    }

    proptest! {
        #[test]
        fn depunctuate_never_panics_and_charset_holds(s in any::<String>()) {
            let out = depunctuate(&s);
            prop_assert!(!out.chars().any(is_stripped_mark));
            // Fully lowercased: caseless symbols (𝒞 and friends) pass through,
            // so compare against to_lowercase rather than char::is_uppercase.
            prop_assert_eq!(out.to_lowercase(), out.clone());
        }

        #[test]
        fn depunctuate_is_idempotent(s in any::<String>()) {
            let once = depunctuate(&s);
            prop_assert_eq!(depunctuate(&once), once);
        }

        #[test]
        fn normalize_is_idempotent(s in any::<String>()) {
            let once = normalize_punctuation(&s);
            prop_assert_eq!(normalize_punctuation(&once), once.clone());
        }

        #[test]
        fn split_conserves_tokens(words in proptest::collection::vec("[a-z]{1,8}", 0..400), limit in 1usize..200) {
            let d = Document { id: "d".into(), text: words.join(" ") };
            let excerpts = split_excerpts(&d, limit);
            let rejoined: Vec<String> = excerpts
                .iter()
                .flat_map(|e| e.target.split_whitespace().map(str::to_string))
                .collect();
            prop_assert_eq!(rejoined, words);
            for (i, e) in excerpts.iter().enumerate() {
                prop_assert!(e.word_count <= limit);
                if i + 1 < excerpts.len() {
                    prop_assert_eq!(e.word_count, limit);
                }
            }
        }
    }
}
