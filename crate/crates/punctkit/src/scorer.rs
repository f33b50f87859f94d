//! Operation-level precision/recall/F1 for restoration output.
//!
//! The unit of scoring is one [`RestorationOp`] — a capitalization change or a
//! single mark insertion at a token slot. Gold ops come from derived labels;
//! predicted ops come either from a predicted label file or from free restored
//! text, which is first depunctuated and re-derived. Free text need not keep
//! the source words intact: [`align_hypothesis`] computes a minimal-edit token
//! alignment over stripped forms, and ops attached to altered, dropped, or
//! hallucinated tokens are counted against the hypothesis (the strict policy:
//! a restorer that rewrites words is not restoring).
//!
//! Zero-denominator convention: a metric whose denominator is 0 is 1.0 when
//! both op sets are empty and 0.0 otherwise, so degenerate hypotheses score
//! deterministically.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{depunctuate, strip_token, Pair};
use crate::labels::{
    derive_labels, labels_to_ops, tokenize, LabeledSequence, OpKind, RestorationOp,
};

/// How one source token fared in the alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypAlignment {
    /// Aligned to this hypothesis token; stripped forms agree.
    Match(usize),
    /// Aligned to this hypothesis token, but the words differ.
    Mismatch(usize),
    /// No hypothesis token for this source token.
    None,
}

/// Token alignment between a source stream and a hypothesis stream.
/// `mapping[i]` is the fate of source token `i`; `unmatched_hyp` lists
/// hypothesis tokens aligned to no source token. Both sides are monotone and
/// used at most once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentOutcome {
    pub mapping: Vec<HypAlignment>,
    pub unmatched_hyp: Vec<usize>,
    pub exact: bool,
}

impl AlignmentOutcome {
    /// The trivial 1:1 alignment for `n` tokens.
    pub fn exact(n: usize) -> AlignmentOutcome {
        AlignmentOutcome {
            mapping: (0..n).map(HypAlignment::Match).collect(),
            unmatched_hyp: Vec::new(),
            exact: true,
        }
    }
}

/// Scoring category: capitalization, or one per mark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OpCategory {
    #[serde(rename = "CAP")]
    Cap,
    #[serde(rename = "COMMA")]
    Comma,
    #[serde(rename = "PERIOD")]
    Period,
    #[serde(rename = "SQUOTE")]
    Squote,
    #[serde(rename = "DQUOTE")]
    Dquote,
}

impl OpCategory {
    pub const ALL: [OpCategory; 5] = [
        OpCategory::Cap,
        OpCategory::Comma,
        OpCategory::Period,
        OpCategory::Squote,
        OpCategory::Dquote,
    ];

    pub fn of(op: &RestorationOp) -> OpCategory {
        match &op.kind {
            OpKind::Cap(_) => OpCategory::Cap,
            OpKind::Insert(ins) => match ins.mark {
                crate::labels::Mark::Comma => OpCategory::Comma,
                crate::labels::Mark::Period => OpCategory::Period,
                crate::labels::Mark::Squote => OpCategory::Squote,
                crate::labels::Mark::Dquote => OpCategory::Dquote,
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OpCategory::Cap => "CAP",
            OpCategory::Comma => "COMMA",
            OpCategory::Period => "PERIOD",
            OpCategory::Squote => "SQUOTE",
            OpCategory::Dquote => "DQUOTE",
        }
    }
}

/// Raw true/false positive/negative counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Counts {
    pub fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

/// Counts plus the derived metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TallyScore {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl TallyScore {
    pub fn from_counts(c: Counts) -> TallyScore {
        let precision = if c.tp + c.fp > 0 {
            c.tp as f64 / (c.tp + c.fp) as f64
        } else if c.fn_ == 0 {
            1.0
        } else {
            0.0
        };
        let recall = if c.tp + c.fn_ > 0 {
            c.tp as f64 / (c.tp + c.fn_) as f64
        } else if c.fp == 0 {
            1.0
        } else {
            0.0
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        TallyScore {
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            precision,
            recall,
            f1,
        }
    }
}

/// Per-category counts; the building block that micro-averaging sums.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CategoryCounts(pub BTreeMap<OpCategory, Counts>);

impl CategoryCounts {
    fn bump(&mut self, cat: OpCategory, f: impl FnOnce(&mut Counts)) {
        f(self.0.entry(cat).or_default())
    }

    pub fn add(&mut self, other: &CategoryCounts) {
        for (cat, c) in &other.0 {
            self.0.entry(*cat).or_default().add(*c);
        }
    }

    pub fn totals(&self) -> Counts {
        let mut t = Counts::default();
        for c in self.0.values() {
            t.add(*c);
        }
        t
    }
}

/// Totals plus a per-category breakdown. Category counts sum to the totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestorationScore {
    #[serde(flatten)]
    pub totals: TallyScore,
    pub per_category: BTreeMap<OpCategory, TallyScore>,
}

impl RestorationScore {
    pub fn from_counts(counts: &CategoryCounts) -> RestorationScore {
        let mut per_category = BTreeMap::new();
        for cat in OpCategory::ALL {
            let c = counts.0.get(&cat).copied().unwrap_or_default();
            per_category.insert(cat, TallyScore::from_counts(c));
        }
        RestorationScore {
            totals: TallyScore::from_counts(counts.totals()),
            per_category,
        }
    }
}

/// Minimal-edit alignment (match 0, substitution/indel 1) between two token
/// streams, with a deterministic backtrace preferring diagonal, then source
/// deletion, then hypothesis insertion.
pub fn align_token_streams(src: &[String], hyp: &[String]) -> AlignmentOutcome {
    if src == hyp {
        return AlignmentOutcome::exact(src.len());
    }
    let n = src.len();
    let m = hyp.len();
    let mut d = vec![vec![0u32; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i as u32;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j as u32;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[i - 1][j - 1] + u32::from(src[i - 1] != hyp[j - 1]);
            let del = d[i - 1][j] + 1;
            let ins = d[i][j - 1] + 1;
            d[i][j] = sub.min(del).min(ins);
        }
    }

    let mut mapping = vec![HypAlignment::None; n];
    let mut unmatched = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let cost = u32::from(src[i - 1] != hyp[j - 1]);
            if d[i][j] == d[i - 1][j - 1] + cost {
                mapping[i - 1] = if cost == 0 {
                    HypAlignment::Match(j - 1)
                } else {
                    HypAlignment::Mismatch(j - 1)
                };
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && d[i][j] == d[i - 1][j] + 1 {
            mapping[i - 1] = HypAlignment::None;
            i -= 1;
        } else {
            unmatched.push(j - 1);
            j -= 1;
        }
    }
    unmatched.reverse();
    AlignmentOutcome {
        mapping,
        unmatched_hyp: unmatched,
        exact: false,
    }
}

/// Aligns free restored text against a (stripped) source string. Hypothesis
/// tokens are stripped the same way the corpus transform strips targets;
/// tokens that strip to nothing vanish from the stream, exactly as they do
/// when the hypothesis is re-derived into labels.
pub fn align_hypothesis(source: &str, hypothesis: &str) -> AlignmentOutcome {
    let src = tokenize(source);
    let hyp: Vec<String> = tokenize(hypothesis)
        .iter()
        .map(|t| strip_token(t))
        .filter(|t| !t.is_empty())
        .collect();
    align_token_streams(&src, &hyp)
}

/// Counts tp/fp/fn per category for one pair. Predicted ops live in
/// hypothesis token indices and are remapped through the alignment; ops on
/// unmatched or word-mismatched tokens are false positives, and gold ops with
/// no surviving counterpart are false negatives.
fn count_restoration(
    gold: &BTreeSet<RestorationOp>,
    pred: &BTreeSet<RestorationOp>,
    alignment: &AlignmentOutcome,
) -> CategoryCounts {
    let mut hyp_to_src: HashMap<usize, usize> = HashMap::new();
    for (src_idx, fate) in alignment.mapping.iter().enumerate() {
        if let HypAlignment::Match(hyp_idx) = fate {
            hyp_to_src.insert(*hyp_idx, src_idx);
        }
    }

    let mut counts = CategoryCounts::default();
    let mut remapped: BTreeSet<RestorationOp> = BTreeSet::new();
    for op in pred {
        match hyp_to_src.get(&op.token_index) {
            Some(&src_idx) => {
                remapped.insert(RestorationOp {
                    token_index: src_idx,
                    kind: op.kind.clone(),
                });
            }
            None => counts.bump(OpCategory::of(op), |c| c.fp += 1),
        }
    }
    for op in &remapped {
        if gold.contains(op) {
            counts.bump(OpCategory::of(op), |c| c.tp += 1);
        } else {
            counts.bump(OpCategory::of(op), |c| c.fp += 1);
        }
    }
    for op in gold {
        if !remapped.contains(op) {
            counts.bump(OpCategory::of(op), |c| c.fn_ += 1);
        }
    }
    counts
}

/// Scores one pair's op sets under an alignment.
pub fn score_restoration(
    gold: &BTreeSet<RestorationOp>,
    pred: &BTreeSet<RestorationOp>,
    alignment: &AlignmentOutcome,
) -> RestorationScore {
    RestorationScore::from_counts(&count_restoration(gold, pred, alignment))
}

/// A hypothesis for one pair: free restored text, or an already-labeled
/// sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Hypothesis {
    Text { id: String, restored: String },
    Labels(LabeledSequence),
}

impl Hypothesis {
    pub fn id(&self) -> &str {
        match self {
            Hypothesis::Text { id, .. } => id,
            Hypothesis::Labels(seq) => &seq.pair_id,
        }
    }
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("duplicate hypothesis id {0:?}")]
    DuplicateHypothesis(String),
}

/// Corpus-level score plus bookkeeping about ids that did not line up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusScore {
    pub score: RestorationScore,
    pub pairs_scored: usize,
    /// Gold ids with no hypothesis; their gold ops all count as fn.
    pub missing_hypotheses: Vec<String>,
    /// Hypothesis ids with no gold pair; not scored.
    pub unmatched_hypotheses: Vec<String>,
    /// Hypothesis texts that could not be decoded into labels; their gold ops
    /// all count as fn.
    pub undecodable_hypotheses: Vec<String>,
}

/// Derives predicted ops from free restored text: depunctuate, then read the
/// labels back off. Returns the hypothesis token stream and its ops.
pub fn ops_from_text(restored: &str) -> Option<(Vec<String>, BTreeSet<RestorationOp>)> {
    let source = depunctuate(restored);
    let pair = Pair {
        id: String::new(),
        source,
        target: restored.to_string(),
    };
    let seq = derive_labels(&pair).ok()?;
    let ops = labels_to_ops(&seq);
    Some((seq.tokens, ops))
}

/// Micro-averaged corpus score: per-pair counts are summed before computing
/// metrics. Gold order decides nothing (integer sums commute), so the
/// per-pair work runs in parallel.
pub fn score_corpus(
    golds: &[LabeledSequence],
    hyps: &[Hypothesis],
) -> Result<CorpusScore, ScoreError> {
    let mut by_id: HashMap<&str, &Hypothesis> = HashMap::new();
    for h in hyps {
        if by_id.insert(h.id(), h).is_some() {
            return Err(ScoreError::DuplicateHypothesis(h.id().to_string()));
        }
    }

    enum PairOutcome {
        Scored(CategoryCounts),
        Missing(CategoryCounts, String),
        Undecodable(CategoryCounts, String),
    }

    let outcomes: Vec<PairOutcome> = golds
        .par_iter()
        .map(|gold| {
            let gold_ops = labels_to_ops(gold);
            let all_fn = || {
                let mut c = CategoryCounts::default();
                for op in &gold_ops {
                    c.bump(OpCategory::of(op), |c| c.fn_ += 1);
                }
                c
            };
            match by_id.get(gold.pair_id.as_str()) {
                None => PairOutcome::Missing(all_fn(), gold.pair_id.clone()),
                Some(Hypothesis::Labels(seq)) => {
                    let alignment = align_token_streams(&gold.tokens, &seq.tokens);
                    let pred_ops = labels_to_ops(seq);
                    PairOutcome::Scored(count_restoration(&gold_ops, &pred_ops, &alignment))
                }
                Some(Hypothesis::Text { restored, .. }) => match ops_from_text(restored) {
                    Some((hyp_tokens, pred_ops)) => {
                        let alignment = align_token_streams(&gold.tokens, &hyp_tokens);
                        PairOutcome::Scored(count_restoration(&gold_ops, &pred_ops, &alignment))
                    }
                    None => PairOutcome::Undecodable(all_fn(), gold.pair_id.clone()),
                },
            }
        })
        .collect();

    let gold_ids: std::collections::HashSet<&str> =
        golds.iter().map(|g| g.pair_id.as_str()).collect();
    let mut unmatched: Vec<String> = hyps
        .iter()
        .filter(|h| !gold_ids.contains(h.id()))
        .map(|h| h.id().to_string())
        .collect();
    unmatched.sort();

    let mut counts = CategoryCounts::default();
    let mut missing = Vec::new();
    let mut undecodable = Vec::new();
    let mut scored = 0usize;
    for outcome in outcomes {
        match outcome {
            PairOutcome::Scored(c) => {
                counts.add(&c);
                scored += 1;
            }
            PairOutcome::Missing(c, id) => {
                counts.add(&c);
                missing.push(id);
            }
            PairOutcome::Undecodable(c, id) => {
                counts.add(&c);
                undecodable.push(id);
            }
        }
    }
    missing.sort();
    undecodable.sort();

    Ok(CorpusScore {
        score: RestorationScore::from_counts(&counts),
        pairs_scored: scored,
        missing_hypotheses: missing,
        unmatched_hypotheses: unmatched,
        undecodable_hypotheses: undecodable,
    })
}
