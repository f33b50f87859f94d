//! Lossless token-level encoding of restoration decisions.
//!
//! Each source token gets a [`TokenLabel`]: a capitalization class plus a list
//! of positional mark insertions. [`derive_labels`] aligns a pair's target
//! tokens to its source tokens and reads the labels off; [`apply_labels`] is
//! the inverse, rebuilding the target from source tokens and labels. On pairs
//! whose targets contain no standalone punctuation tokens the round trip is
//! byte-exact; standalone mark tokens are folded onto a neighbouring token, so
//! for those the reconstruction is a single-spaced normal form (and the fold
//! is idempotent: re-deriving from the reconstruction gives the same labels).
//!
//! [`labels_to_ops`] flattens a labeled sequence into the atomic decision set
//! (one op per capitalization change or mark insertion) that the scorer
//! counts.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{strip_token, Pair};

/// One of the four restorable marks.
///
/// The `Ord` order (comma, period, dquote, squote) is the canonical order for
/// same-position insert stacks; dquote-before-squote matches the usual English
/// nesting (`"'`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mark {
    Comma,
    Period,
    Dquote,
    Squote,
}

impl Mark {
    pub fn ch(self) -> char {
        match self {
            Mark::Comma => ',',
            Mark::Period => '.',
            Mark::Dquote => '"',
            Mark::Squote => '\'',
        }
    }

    pub fn from_char(c: char) -> Option<Mark> {
        match c {
            ',' => Some(Mark::Comma),
            '.' => Some(Mark::Period),
            '"' => Some(Mark::Dquote),
            '\'' => Some(Mark::Squote),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mark::Comma => "comma",
            Mark::Period => "period",
            Mark::Dquote => "dquote",
            Mark::Squote => "squote",
        }
    }

    pub fn from_name(s: &str) -> Option<Mark> {
        match s {
            "comma" => Some(Mark::Comma),
            "period" => Some(Mark::Period),
            "dquote" => Some(Mark::Dquote),
            "squote" => Some(Mark::Squote),
            _ => None,
        }
    }
}

/// Where a mark goes relative to the source token: before it, inside it
/// (offset counts source characters to the left), or after it (rank orders
/// stacked trailing marks like `."`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Leading,
    Interior(usize),
    Trailing(usize),
}

/// A single mark insertion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MarkInsert {
    pub slot: Slot,
    pub mark: Mark,
}

/// Capitalization class, tested in order: all-lowercase, first character
/// uppercased, every character uppercased, and finally an explicit per-character
/// mask (set bits = uppercase) for mixed-case tokens like `McDonald`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CapClass {
    Lower,
    Initial,
    AllCaps,
    Other(Vec<bool>),
}

/// The full restoration decision for one source token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenLabel {
    pub cap: CapClass,
    pub inserts: Vec<MarkInsert>,
}

impl TokenLabel {
    pub fn plain() -> TokenLabel {
        TokenLabel {
            cap: CapClass::Lower,
            inserts: Vec::new(),
        }
    }
}

/// Labels for a whole pair: source tokens and one label per token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "WireSequence", into = "WireSequence")]
pub struct LabeledSequence {
    pub pair_id: String,
    pub tokens: Vec<String>,
    pub labels: Vec<TokenLabel>,
}

/// One atomic restoration decision, the unit the scorer counts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RestorationOp {
    pub token_index: usize,
    pub kind: OpKind,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpKind {
    Cap(CapClass),
    Insert(MarkInsert),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlignmentError {
    #[error("token {index}: source is {src:?} but target strips to {stripped:?}")]
    TokenMismatch {
        index: usize,
        src: String,
        stripped: String,
    },
    #[error("source has {source_len} tokens but target accounts for {aligned} of them")]
    TokenCountMismatch { source_len: usize, aligned: usize },
    #[error("capitalization of {target:?} cannot be encoded against source token {src:?}")]
    UnencodableCap { src: String, target: String },
    #[error("a mark inside {target:?} does not sit on a source character boundary")]
    UnencodableInsert { target: String },
    #[error("standalone punctuation {marks:?} has no token to attach to")]
    DanglingMarks { marks: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ApplyError {
    #[error("got {tokens} tokens but {labels} labels")]
    LengthMismatch { tokens: usize, labels: usize },
    #[error("interior offset {offset} is out of range for token {token:?} ({len} chars)")]
    OffsetOutOfRange {
        token: String,
        offset: usize,
        len: usize,
    },
    #[error("capitalization mask has {mask_len} bits but token {token:?} has {len} chars")]
    MaskLengthMismatch {
        token: String,
        mask_len: usize,
        len: usize,
    },
}

/// Errors when rebuilding labels from an op set.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OpsError {
    #[error("op token index {index} out of range for {len} tokens")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("token {index} has more than one capitalization op")]
    DuplicateCap { index: usize },
}

/// Splits on whitespace runs; never yields empty tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

/// Uppercases `token` according to `cap`. Character-wise full uppercase
/// mappings are used, so expansions like ß → SS are possible.
pub fn apply_cap(cap: &CapClass, token: &str) -> Result<String, ApplyError> {
    match cap {
        CapClass::Lower => Ok(token.to_string()),
        CapClass::Initial => {
            let mut chars = token.chars();
            match chars.next() {
                None => Ok(String::new()),
                Some(first) => Ok(first.to_uppercase().chain(chars).collect()),
            }
        }
        CapClass::AllCaps => Ok(token.chars().flat_map(char::to_uppercase).collect()),
        CapClass::Other(mask) => {
            let len = token.chars().count();
            if mask.len() != len {
                return Err(ApplyError::MaskLengthMismatch {
                    token: token.to_string(),
                    mask_len: mask.len(),
                    len,
                });
            }
            Ok(token
                .chars()
                .zip(mask.iter())
                .flat_map(|(c, &up)| {
                    if up {
                        c.to_uppercase().collect::<Vec<char>>()
                    } else {
                        vec![c]
                    }
                })
                .collect())
        }
    }
}

/// For each source-char count j in 0..=len, the number of output chars after
/// capitalizing the first j chars. Strictly increasing, so it doubles as the
/// map from interior offsets to positions in the capitalized token.
fn cap_boundaries(cap: &CapClass, token: &str) -> Vec<usize> {
    let chars: Vec<char> = token.chars().collect();
    let mut bounds = Vec::with_capacity(chars.len() + 1);
    bounds.push(0usize);
    let mut acc = 0usize;
    for (j, &c) in chars.iter().enumerate() {
        let up = match cap {
            CapClass::Lower => false,
            CapClass::Initial => j == 0,
            CapClass::AllCaps => true,
            CapClass::Other(mask) => mask.get(j).copied().unwrap_or(false),
        };
        acc += if up { c.to_uppercase().count() } else { 1 };
        bounds.push(acc);
    }
    bounds
}

/// Picks the first class in (Lower, Initial, AllCaps, Other) that maps `src`
/// onto `core` exactly. None means the casing is not encodable (precomposed
/// İ against its two-char lowercase, titlecase letters, and similar).
fn derive_cap(src: &str, core: &str) -> Option<CapClass> {
    for cap in [CapClass::Lower, CapClass::Initial, CapClass::AllCaps] {
        if apply_cap(&cap, src).ok().as_deref() == Some(core) {
            return Some(cap);
        }
    }
    let s: Vec<char> = src.chars().collect();
    let c: Vec<char> = core.chars().collect();
    if s.len() == c.len() {
        let mask: Vec<bool> = s.iter().zip(c.iter()).map(|(a, b)| a != b).collect();
        let cap = CapClass::Other(mask);
        if apply_cap(&cap, src).ok().as_deref() == Some(core) {
            return Some(cap);
        }
    }
    None
}

/// Derives the label for one aligned (source, target) token. `src` must equal
/// `strip_token(tgt)` — the caller has already checked that.
fn derive_token_label(src: &str, tgt: &str) -> Result<TokenLabel, AlignmentError> {
    let mut core = String::new();
    let mut core_len = 0usize;
    let mut raw: Vec<(usize, Mark)> = Vec::new();
    for c in tgt.chars() {
        match Mark::from_char(c) {
            Some(m) => raw.push((core_len, m)),
            None => {
                core.push(c);
                core_len += 1;
            }
        }
    }
    let cap = derive_cap(src, &core).ok_or_else(|| AlignmentError::UnencodableCap {
        src: src.to_string(),
        target: tgt.to_string(),
    })?;
    let bounds = cap_boundaries(&cap, src);
    let mut inserts = Vec::with_capacity(raw.len());
    let mut trailing_rank = 0usize;
    for (pos, mark) in raw {
        let slot = if pos == 0 {
            Slot::Leading
        } else if pos == core_len {
            let rank = trailing_rank;
            trailing_rank += 1;
            Slot::Trailing(rank)
        } else {
            // bounds is strictly increasing, so binary search finds the unique
            // source offset whose boundary is this core position, if any.
            match bounds.binary_search(&pos) {
                Ok(offset) => Slot::Interior(offset),
                Err(_) => {
                    return Err(AlignmentError::UnencodableInsert {
                        target: tgt.to_string(),
                    })
                }
            }
        };
        inserts.push(MarkInsert { slot, mark });
    }
    Ok(TokenLabel { cap, inserts })
}

/// Aligns target tokens to source tokens and derives one label per source
/// token. Standalone-punctuation target tokens (empty after stripping) attach
/// their marks as trailing inserts of the previous token, or leading inserts
/// of the next token at sequence start.
pub fn derive_labels(pair: &Pair) -> Result<LabeledSequence, AlignmentError> {
    let src_tokens = tokenize(&pair.source);
    let tgt_tokens = tokenize(&pair.target);

    let mut labels: Vec<TokenLabel> = Vec::with_capacity(src_tokens.len());
    let mut aligned = 0usize;
    let mut pending_leading: Vec<Mark> = Vec::new();

    for tt in &tgt_tokens {
        let stripped = strip_token(tt);
        if stripped.is_empty() {
            let marks = tt.chars().filter_map(Mark::from_char);
            match labels.last_mut() {
                Some(prev) => {
                    let base = prev
                        .inserts
                        .iter()
                        .filter(|i| matches!(i.slot, Slot::Trailing(_)))
                        .count();
                    prev.inserts
                        .extend(marks.enumerate().map(|(k, mark)| MarkInsert {
                            slot: Slot::Trailing(base + k),
                            mark,
                        }));
                }
                None => pending_leading.extend(marks),
            }
            continue;
        }
        let src = src_tokens
            .get(aligned)
            .ok_or(AlignmentError::TokenCountMismatch {
                source_len: src_tokens.len(),
                aligned: aligned + 1,
            })?;
        if *src != stripped {
            return Err(AlignmentError::TokenMismatch {
                index: aligned,
                src: src.clone(),
                stripped,
            });
        }
        let mut label = derive_token_label(src, tt)?;
        if !pending_leading.is_empty() {
            let mut inserts: Vec<MarkInsert> = pending_leading
                .drain(..)
                .map(|mark| MarkInsert {
                    slot: Slot::Leading,
                    mark,
                })
                .collect();
            inserts.append(&mut label.inserts);
            label.inserts = inserts;
        }
        labels.push(label);
        aligned += 1;
    }

    if !pending_leading.is_empty() {
        return Err(AlignmentError::DanglingMarks {
            marks: pending_leading.iter().map(|m| m.ch()).collect(),
        });
    }
    if aligned != src_tokens.len() {
        return Err(AlignmentError::TokenCountMismatch {
            source_len: src_tokens.len(),
            aligned,
        });
    }
    Ok(LabeledSequence {
        pair_id: pair.id.clone(),
        tokens: src_tokens,
        labels,
    })
}

/// Applies one label to one source token.
fn apply_token(token: &str, label: &TokenLabel) -> Result<String, ApplyError> {
    let src_len = token.chars().count();
    let core = apply_cap(&label.cap, token)?;
    let bounds = cap_boundaries(&label.cap, token);

    let mut leading: Vec<Mark> = Vec::new();
    let mut interior: Vec<(usize, usize, Mark)> = Vec::new(); // (core pos, list order, mark)
    let mut trailing: Vec<(usize, usize, Mark)> = Vec::new(); // (rank, list order, mark)
    for (ord, ins) in label.inserts.iter().enumerate() {
        match ins.slot {
            Slot::Leading => leading.push(ins.mark),
            Slot::Interior(offset) => {
                if offset < 1 || offset > src_len {
                    return Err(ApplyError::OffsetOutOfRange {
                        token: token.to_string(),
                        offset,
                        len: src_len,
                    });
                }
                interior.push((bounds[offset], ord, ins.mark));
            }
            Slot::Trailing(rank) => trailing.push((rank, ord, ins.mark)),
        }
    }
    interior.sort();
    trailing.sort();

    let mut out = String::with_capacity(core.len() + label.inserts.len());
    out.extend(leading.iter().map(|m| m.ch()));
    let mut pending = interior.into_iter().peekable();
    for (pos, c) in core.chars().enumerate() {
        while pending.peek().is_some_and(|&(p, _, _)| p <= pos) {
            out.push(pending.next().unwrap().2.ch());
        }
        out.push(c);
    }
    out.extend(pending.map(|(_, _, m)| m.ch()));
    out.extend(trailing.into_iter().map(|(_, _, m)| m.ch()));
    Ok(out)
}

/// Rebuilds the target string: each token capitalized and marked per its
/// label, tokens joined with single spaces.
pub fn apply_labels(tokens: &[String], labels: &[TokenLabel]) -> Result<String, ApplyError> {
    if tokens.len() != labels.len() {
        return Err(ApplyError::LengthMismatch {
            tokens: tokens.len(),
            labels: labels.len(),
        });
    }
    let parts: Result<Vec<String>, ApplyError> = tokens
        .iter()
        .zip(labels.iter())
        .map(|(t, l)| apply_token(t, l))
        .collect();
    Ok(parts?.join(" "))
}

/// Flattens a labeled sequence into its decision set: one cap op per token
/// with non-lowercase cap, one insert op per mark insertion.
pub fn labels_to_ops(seq: &LabeledSequence) -> BTreeSet<RestorationOp> {
    let mut ops = BTreeSet::new();
    for (token_index, label) in seq.labels.iter().enumerate() {
        if label.cap != CapClass::Lower {
            ops.insert(RestorationOp {
                token_index,
                kind: OpKind::Cap(label.cap.clone()),
            });
        }
        for ins in &label.inserts {
            ops.insert(RestorationOp {
                token_index,
                kind: OpKind::Insert(*ins),
            });
        }
    }
    ops
}

/// Inverse of [`labels_to_ops`] given the token count: rebuilds per-token
/// labels, ordering same-position insert stacks canonically (leading by mark
/// order, interior by offset then mark, trailing by rank).
pub fn ops_to_labels(
    token_count: usize,
    ops: &BTreeSet<RestorationOp>,
) -> Result<Vec<TokenLabel>, OpsError> {
    let mut labels = vec![TokenLabel::plain(); token_count];
    for op in ops {
        let label =
            labels
                .get_mut(op.token_index)
                .ok_or(OpsError::IndexOutOfRange {
                    index: op.token_index,
                    len: token_count,
                })?;
        match &op.kind {
            OpKind::Cap(cap) => {
                if label.cap != CapClass::Lower {
                    return Err(OpsError::DuplicateCap {
                        index: op.token_index,
                    });
                }
                label.cap = cap.clone();
            }
            OpKind::Insert(ins) => label.inserts.push(*ins),
        }
    }
    // BTreeSet iteration already sorts by (index, kind); within a token the
    // inserts arrive leading → interior(offset) → trailing(rank), marks in
    // canonical order at equal positions. That is exactly the apply order.
    for label in &mut labels {
        label.inserts.sort();
    }
    Ok(labels)
}

// --- wire format ---------------------------------------------------------

#[derive(Serialize, Deserialize, Clone)]
struct WireInsert {
    slot: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    offset: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rank: Option<usize>,
    mark: String,
}

#[derive(Serialize, Deserialize, Clone)]
struct WireLabel {
    cap: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mask: Option<String>,
    inserts: Vec<WireInsert>,
}

#[derive(Serialize, Deserialize, Clone)]
struct WireSequence {
    id: String,
    tokens: Vec<String>,
    labels: Vec<WireLabel>,
}

impl From<LabeledSequence> for WireSequence {
    fn from(seq: LabeledSequence) -> WireSequence {
        let labels = seq
            .labels
            .iter()
            .map(|l| {
                let (cap, mask) = match &l.cap {
                    CapClass::Lower => ("lower", None),
                    CapClass::Initial => ("initial", None),
                    CapClass::AllCaps => ("all_caps", None),
                    CapClass::Other(mask) => (
                        "other",
                        Some(mask.iter().map(|&b| if b { '1' } else { '0' }).collect()),
                    ),
                };
                WireLabel {
                    cap: cap.to_string(),
                    mask,
                    inserts: l
                        .inserts
                        .iter()
                        .map(|i| {
                            let (slot, offset, rank) = match i.slot {
                                Slot::Leading => ("leading", None, None),
                                Slot::Interior(o) => ("interior", Some(o), None),
                                Slot::Trailing(r) => ("trailing", None, Some(r)),
                            };
                            WireInsert {
                                slot: slot.to_string(),
                                offset,
                                rank,
                                mark: i.mark.name().to_string(),
                            }
                        })
                        .collect(),
                }
            })
            .collect();
        WireSequence {
            id: seq.pair_id,
            tokens: seq.tokens,
            labels,
        }
    }
}

impl TryFrom<WireSequence> for LabeledSequence {
    type Error = String;

    fn try_from(wire: WireSequence) -> Result<LabeledSequence, String> {
        if wire.tokens.len() != wire.labels.len() {
            return Err(format!(
                "{}: {} tokens but {} labels",
                wire.id,
                wire.tokens.len(),
                wire.labels.len()
            ));
        }
        let mut labels = Vec::with_capacity(wire.labels.len());
        for wl in &wire.labels {
            let cap = match wl.cap.as_str() {
                "lower" => CapClass::Lower,
                "initial" => CapClass::Initial,
                "all_caps" => CapClass::AllCaps,
                "other" => {
                    let mask = wl
                        .mask
                        .as_deref()
                        .ok_or_else(|| "cap \"other\" requires a mask".to_string())?;
                    let bits: Result<Vec<bool>, String> = mask
                        .chars()
                        .map(|c| match c {
                            '0' => Ok(false),
                            '1' => Ok(true),
                            other => Err(format!("bad mask character {other:?}")),
                        })
                        .collect();
                    CapClass::Other(bits?)
                }
                other => return Err(format!("unknown cap class {other:?}")),
            };
            let mut inserts = Vec::with_capacity(wl.inserts.len());
            for wi in &wl.inserts {
                let slot = match wi.slot.as_str() {
                    "leading" => Slot::Leading,
                    "interior" => Slot::Interior(
                        wi.offset
                            .ok_or_else(|| "interior insert requires an offset".to_string())?,
                    ),
                    "trailing" => Slot::Trailing(
                        wi.rank
                            .ok_or_else(|| "trailing insert requires a rank".to_string())?,
                    ),
                    other => return Err(format!("unknown slot {other:?}")),
                };
                let mark = Mark::from_name(&wi.mark)
                    .ok_or_else(|| format!("unknown mark {:?}", wi.mark))?;
                inserts.push(MarkInsert { slot, mark });
            }
            labels.push(TokenLabel { cap, inserts });
        }
        Ok(LabeledSequence {
            pair_id: wire.id,
            tokens: wire.tokens,
            labels,
        })
    }
}
