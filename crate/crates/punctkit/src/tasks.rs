//! Downstream structure tasks: column-corpus readers, BIO span extraction,
//! flat linearization of spans and tuples for text-to-text models, the total
//! parser that turns (untrusted) model output back into structures, and
//! exact-match scorers for spans, tuples, tag sequences, sentence boundaries,
//! and instance labels.
//!
//! Every scorer reduces to tp/fp/fn counts folded through
//! [`TallyScore::from_counts`], so corpus-level numbers are micro-averages of
//! per-sentence counts and the zero-denominator conventions match restoration
//! scoring.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scorer::{align_token_streams, Counts, HypAlignment, TallyScore};

/// One annotated sentence in a column corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: String,
    pub tokens: Vec<String>,
    /// Per-token annotation columns (`pos`, `chunk`, `ner`, …); every column
    /// holds exactly one tag per token.
    #[serde(default)]
    pub columns: BTreeMap<String, Vec<String>>,
    /// Sentence-level triple annotations; column corpora leave this empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tuples: Vec<Tuple>,
    /// Single-space detokenization of `tokens`.
    #[serde(default)]
    pub raw_text: String,
}

impl TaskRecord {
    /// Builds a record over `tokens`, detokenizing `raw_text` with single
    /// spaces; `token_range`s elsewhere stay authoritative.
    pub fn new(
        id: impl Into<String>,
        tokens: Vec<String>,
        columns: BTreeMap<String, Vec<String>>,
    ) -> TaskRecord {
        let raw_text = tokens.join(" ");
        TaskRecord {
            id: id.into(),
            tokens,
            columns,
            tuples: Vec::new(),
            raw_text,
        }
    }

    /// Checks the per-column length invariant and fills in `raw_text` when the
    /// record arrived without one. JSON-lines input is untrusted; call this on
    /// anything read from disk.
    pub fn normalize(&mut self) -> Result<(), RecordError> {
        for (name, tags) in &self.columns {
            if tags.len() != self.tokens.len() {
                return Err(RecordError::ColumnLength {
                    id: self.id.clone(),
                    column: name.clone(),
                    len: tags.len(),
                    tokens: self.tokens.len(),
                });
            }
        }
        if self.raw_text.is_empty() {
            self.raw_text = self.tokens.join(" ");
        }
        Ok(())
    }

    /// The named tag column, if present.
    pub fn column(&self, name: &str) -> Option<&[String]> {
        self.columns.get(name).map(|v| v.as_slice())
    }
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("record {id}: column {column:?} has {len} tags for {tokens} tokens")]
    ColumnLength {
        id: String,
        column: String,
        len: usize,
        tokens: usize,
    },
}

/// A typed text span. `token_range` is half-open in token indices and present
/// when the span came from tags; spans parsed out of model output carry only
/// their surface.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub surface: String,
    #[serde(rename = "type")]
    pub ty: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_range: Option<(usize, usize)>,
}

impl Span {
    /// A span with no token range (the shape model output parses into).
    pub fn new(surface: impl Into<String>, ty: impl Into<String>) -> Span {
        Span {
            surface: surface.into(),
            ty: ty.into(),
            token_range: None,
        }
    }
}

/// An (arg0, predicate, arg1) extraction triple. All fields are meant to be
/// non-empty after trimming; the parser enforces that.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Tuple {
    pub arg0: String,
    pub predicate: String,
    pub arg1: String,
}

impl Tuple {
    pub fn new(
        arg0: impl Into<String>,
        predicate: impl Into<String>,
        arg1: impl Into<String>,
    ) -> Tuple {
        Tuple {
            arg0: arg0.into(),
            predicate: predicate.into(),
            arg1: arg1.into(),
        }
    }
}

/// One line of a linearized task file: the model's input text and the flat
/// target string it should produce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearizedRecord {
    pub id: String,
    pub input: String,
    pub target: String,
}

/// One line of a prediction file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub output: String,
}

/// One parsed prediction: recovered structures plus parse diagnostics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelinearizedRecord {
    pub id: String,
    pub spans: Vec<Span>,
    pub tuples: Vec<Tuple>,
    pub diagnostics: ParseDiagnostics,
}

/// One tag sequence recovered from a prediction line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagsRecord {
    pub id: String,
    pub tags: Vec<String>,
}

// ---------------------------------------------------------------------------
// Column-corpus reader

/// Column layout of a whitespace-separated, blank-line-sentence file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConllSchema {
    /// token, pos, chunk, ner — the 2003 shared-task layout.
    Conll03,
    /// token, pos, chunk — the 2000 chunking layout.
    Conll00,
}

impl ConllSchema {
    fn column_names(self) -> &'static [&'static str] {
        match self {
            ConllSchema::Conll03 => &["pos", "chunk", "ner"],
            ConllSchema::Conll00 => &["pos", "chunk"],
        }
    }
}

#[derive(Debug, Error)]
pub enum ConllError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected {expected} columns, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
}

/// Reads a column file from disk. See [`parse_conll`].
pub fn read_conll(path: &Path, schema: ConllSchema) -> Result<Vec<TaskRecord>, ConllError> {
    parse_conll(&fs::read_to_string(path)?, schema)
}

/// Parses blank-line-separated column text. `-DOCSTART-` sentinel sentences
/// are dropped; the surviving records get sequential decimal ids. Every row
/// must have exactly the schema's column count.
pub fn parse_conll(content: &str, schema: ConllSchema) -> Result<Vec<TaskRecord>, ConllError> {
    fn flush(
        names: &[&str],
        tokens: &mut Vec<String>,
        cols: &mut [Vec<String>],
        records: &mut Vec<TaskRecord>,
    ) {
        if tokens.is_empty() {
            return;
        }
        let toks = std::mem::take(tokens);
        let taken: Vec<Vec<String>> = cols.iter_mut().map(std::mem::take).collect();
        if toks[0] == "-DOCSTART-" {
            return;
        }
        let columns = names
            .iter()
            .map(|n| n.to_string())
            .zip(taken)
            .collect::<BTreeMap<_, _>>();
        let id = records.len().to_string();
        records.push(TaskRecord::new(id, toks, columns));
    }

    let names = schema.column_names();
    let expected = names.len() + 1;
    let mut records = Vec::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut cols: Vec<Vec<String>> = vec![Vec::new(); names.len()];
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            flush(names, &mut tokens, &mut cols, &mut records);
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != expected {
            return Err(ConllError::RaggedRow {
                line: idx + 1,
                expected,
                found: fields.len(),
            });
        }
        tokens.push(fields[0].to_string());
        for (k, field) in fields[1..].iter().enumerate() {
            cols[k].push(field.to_string());
        }
    }
    flush(names, &mut tokens, &mut cols, &mut records);
    Ok(records)
}

// ---------------------------------------------------------------------------
// BIO span extraction

#[derive(Debug, Error)]
pub enum BioError {
    #[error("token {index}: unrecognized tag {tag:?} (want O, B-<type>, or I-<type>)")]
    UnknownTag { index: usize, tag: String },
    #[error("{tokens} tokens but {tags} tags")]
    LengthMismatch { tokens: usize, tags: usize },
}

/// Extracted spans plus how many had to be opened by the lenient repair (an
/// `I-` tag with no live span of its type starts one anyway).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BioSpans {
    pub spans: Vec<Span>,
    pub repairs: usize,
}

/// Turns a BIO tag sequence into typed spans, in corpus order. Surfaces join
/// the covered tokens with single spaces and `token_range` records the
/// half-open index range.
pub fn spans_from_bio(tokens: &[String], tags: &[String]) -> Result<BioSpans, BioError> {
    if tokens.len() != tags.len() {
        return Err(BioError::LengthMismatch {
            tokens: tokens.len(),
            tags: tags.len(),
        });
    }
    let (runs, repairs) = bio_runs(tags)?;
    let spans = runs
        .into_iter()
        .map(|(ty, start, end)| Span {
            surface: tokens[start..end].join(" "),
            ty,
            token_range: Some((start, end)),
        })
        .collect();
    Ok(BioSpans { spans, repairs })
}

/// A (type, start, end) run of same-type B/I tags.
type BioRun = (String, usize, usize);

/// Core run extraction: typed runs plus the repair count.
fn bio_runs(tags: &[String]) -> Result<(Vec<BioRun>, usize), BioError> {
    let mut runs: Vec<BioRun> = Vec::new();
    let mut open: Option<(String, usize)> = None;
    let mut repairs = 0usize;
    for (i, tag) in tags.iter().enumerate() {
        let unknown = || BioError::UnknownTag {
            index: i,
            tag: tag.clone(),
        };
        if tag == "O" {
            if let Some((ty, start)) = open.take() {
                runs.push((ty, start, i));
            }
        } else if let Some(ty) = tag.strip_prefix("B-") {
            if ty.is_empty() {
                return Err(unknown());
            }
            if let Some((prev, start)) = open.take() {
                runs.push((prev, start, i));
            }
            open = Some((ty.to_string(), i));
        } else if let Some(ty) = tag.strip_prefix("I-") {
            if ty.is_empty() {
                return Err(unknown());
            }
            match &open {
                Some((live, _)) if live == ty => {}
                _ => {
                    // Lenient repair: an I- tag with no live same-type span
                    // opens one rather than failing the whole sentence.
                    repairs += 1;
                    if let Some((prev, start)) = open.take() {
                        runs.push((prev, start, i));
                    }
                    open = Some((ty.to_string(), i));
                }
            }
        } else {
            return Err(unknown());
        }
    }
    if let Some((ty, start)) = open {
        runs.push((ty, start, tags.len()));
    }
    Ok((runs, repairs))
}

// ---------------------------------------------------------------------------
// Linearization

fn ner_group(span: &Span) -> String {
    format!("({}: {})", span.surface, span.ty)
}

fn openie_group(tuple: &Tuple) -> String {
    format!("({}, {}, {})", tuple.arg0, tuple.predicate, tuple.arg1)
}

/// Renders spans as space-joined `(surface: TYPE)` groups in corpus order.
pub fn linearize_ner(spans: &[Span]) -> String {
    spans.iter().map(ner_group).collect::<Vec<_>>().join(" ")
}

/// Renders tuples as space-joined `(arg0, predicate, arg1)` groups.
pub fn linearize_openie(tuples: &[Tuple]) -> String {
    tuples
        .iter()
        .map(openie_group)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Interleaved rendering: each span's group is followed by the not-yet-emitted
/// tuples whose `arg0` equals its surface, and tuples whose subject matches no
/// span trail at the end. Span order is preserved, so parsing the output
/// recovers the span sequence exactly; tuple order survives as a multiset.
pub fn linearize_multitask(spans: &[Span], tuples: &[Tuple]) -> String {
    let mut emitted = vec![false; tuples.len()];
    let mut groups: Vec<String> = Vec::with_capacity(spans.len() + tuples.len());
    for span in spans {
        groups.push(ner_group(span));
        for (k, tuple) in tuples.iter().enumerate() {
            if !emitted[k] && tuple.arg0 == span.surface {
                emitted[k] = true;
                groups.push(openie_group(tuple));
            }
        }
    }
    for (k, tuple) in tuples.iter().enumerate() {
        if !emitted[k] {
            groups.push(openie_group(tuple));
        }
    }
    groups.join(" ")
}

/// Tag sequences linearize as the space-joined tags themselves.
pub fn linearize_tags(tags: &[String]) -> String {
    tags.join(" ")
}

/// Inverse of [`linearize_tags`] on model output: whitespace-split tags.
pub fn delinearize_tags(output: &str) -> Vec<String> {
    output.split_whitespace().map(str::to_string).collect()
}

// ---------------------------------------------------------------------------
// Delinearization

/// Which group shapes a linearized string is expected to carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Ner,
    OpenIe,
    Multitask,
}

/// Parse diagnostics; nothing here aborts parsing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostics {
    /// Balanced groups that fit no accepted shape: wrong arity, an empty
    /// tuple field, or the wrong group kind for the requested task.
    pub malformed_groups: usize,
    /// Unmatched parentheses — stray closers and unterminated opens.
    pub unbalanced: usize,
}

impl ParseDiagnostics {
    pub fn total(self) -> usize {
        self.malformed_groups + self.unbalanced
    }

    pub fn is_clean(self) -> bool {
        self.total() == 0
    }
}

/// Structures recovered from one model output string.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Delinearized {
    pub spans: Vec<Span>,
    pub tuples: Vec<Tuple>,
    pub diagnostics: ParseDiagnostics,
}

/// Total parser for linearized output. Scans top-level parenthesized groups
/// left to right (text between groups is ignored); a group with a top-level
/// `": "` splits at its first occurrence into a span, and a group splitting on
/// top-level `", "` into three or more fields becomes a tuple whose middle
/// fields re-join as the predicate. Under [`TaskKind::Multitask`] the span
/// shape is tried first. Everything unparseable lands in the diagnostics.
pub fn delinearize(output: &str, kind: TaskKind) -> Delinearized {
    let (groups, unbalanced) = top_level_groups(output);
    let mut out = Delinearized {
        diagnostics: ParseDiagnostics {
            malformed_groups: 0,
            unbalanced,
        },
        ..Delinearized::default()
    };
    for group in groups {
        let ok = match kind {
            TaskKind::Ner => {
                if let Some(span) = parse_span_group(group) {
                    out.spans.push(span);
                    true
                } else {
                    false
                }
            }
            TaskKind::OpenIe => {
                if let Some(tuple) = parse_tuple_group(group) {
                    out.tuples.push(tuple);
                    true
                } else {
                    false
                }
            }
            TaskKind::Multitask => {
                if let Some(span) = parse_span_group(group) {
                    out.spans.push(span);
                    true
                } else if let Some(tuple) = parse_tuple_group(group) {
                    out.tuples.push(tuple);
                    true
                } else {
                    false
                }
            }
        };
        if !ok {
            out.diagnostics.malformed_groups += 1;
        }
    }
    out
}

/// Interiors of balanced top-level `(...)` groups, plus the unbalanced count:
/// one per stray `)` at the top level and one for an unterminated open group.
fn top_level_groups(s: &str) -> (Vec<&str>, usize) {
    let mut groups = Vec::new();
    let mut unbalanced = 0usize;
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in s.char_indices() {
        match c {
            '(' => {
                if depth == 0 {
                    start = i + 1;
                }
                depth += 1;
            }
            ')' => match depth {
                0 => unbalanced += 1,
                1 => {
                    groups.push(&s[start..i]);
                    depth = 0;
                }
                _ => depth -= 1,
            },
            _ => {}
        }
    }
    if depth > 0 {
        unbalanced += 1;
    }
    (groups, unbalanced)
}

/// Byte offset of the first `sep` occurrence at paren depth 0. Separators are
/// ASCII, so byte scanning lands on char boundaries.
fn find_top_level(group: &str, sep: &str) -> Option<usize> {
    let bytes = group.as_bytes();
    let sep_bytes = sep.as_bytes();
    let mut depth = 0usize;
    for i in 0..bytes.len() {
        match bytes[i] {
            b'(' => depth += 1,
            b')' => depth = depth.saturating_sub(1),
            _ => {
                if depth == 0 && bytes[i..].starts_with(sep_bytes) {
                    return Some(i);
                }
            }
        }
    }
    None
}

/// Splits at every `sep` occurrence at paren depth 0.
fn split_top_level<'a>(group: &'a str, sep: &str) -> Vec<&'a str> {
    let bytes = group.as_bytes();
    let sep_bytes = sep.as_bytes();
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    let mut i = 0usize;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                depth += 1;
                i += 1;
            }
            b')' => {
                depth = depth.saturating_sub(1);
                i += 1;
            }
            _ if depth == 0 && bytes[i..].starts_with(sep_bytes) => {
                parts.push(&group[start..i]);
                i += sep_bytes.len();
                start = i;
            }
            _ => i += 1,
        }
    }
    parts.push(&group[start..]);
    parts
}

/// `surface: TYPE`, split at the first top-level `": "` so surfaces without
/// colons round-trip even when the type contains one. Fields are trimmed.
fn parse_span_group(group: &str) -> Option<Span> {
    let i = find_top_level(group, ": ")?;
    Some(Span::new(group[..i].trim(), group[i + 2..].trim()))
}

/// `arg0, predicate, arg1` with middle fields re-joined by `", "`; every field
/// must be non-empty after trimming.
fn parse_tuple_group(group: &str) -> Option<Tuple> {
    let fields = split_top_level(group, ", ");
    if fields.len() < 3 {
        return None;
    }
    let arg0 = fields[0].trim();
    let arg1 = fields[fields.len() - 1].trim();
    let predicate = fields[1..fields.len() - 1].join(", ");
    let predicate = predicate.trim();
    if arg0.is_empty() || predicate.is_empty() || arg1.is_empty() {
        return None;
    }
    Some(Tuple::new(arg0, predicate, arg1))
}

// ---------------------------------------------------------------------------
// Scorers

/// Multiset-intersection counts: each pred item consumes at most one equal
/// gold item; leftovers on either side are fp / fn.
fn multiset_counts<K: Ord>(gold: Vec<K>, pred: Vec<K>) -> Counts {
    let gold_total = gold.len() as u64;
    let mut bag: BTreeMap<K, u64> = BTreeMap::new();
    for key in gold {
        *bag.entry(key).or_insert(0) += 1;
    }
    let mut counts = Counts::default();
    for key in pred {
        match bag.get_mut(&key) {
            Some(n) if *n > 0 => {
                *n -= 1;
                counts.tp += 1;
            }
            _ => counts.fp += 1,
        }
    }
    counts.fn_ = gold_total - counts.tp;
    counts
}

fn span_key(span: &Span) -> (String, String) {
    (
        span.surface.trim().to_string(),
        span.ty.trim().to_string(),
    )
}

fn tuple_key(tuple: &Tuple) -> (String, String, String) {
    (
        tuple.arg0.trim().to_string(),
        tuple.predicate.trim().to_string(),
        tuple.arg1.trim().to_string(),
    )
}

/// Raw counts for exact span matching on trimmed `(surface, type)` multisets;
/// token ranges do not participate. Sum these per sentence to micro-average.
pub fn span_counts(gold: &[Span], pred: &[Span]) -> Counts {
    multiset_counts(
        gold.iter().map(span_key).collect(),
        pred.iter().map(span_key).collect(),
    )
}

/// Raw counts for exact tuple matching on trimmed field multisets.
pub fn tuple_counts(gold: &[Tuple], pred: &[Tuple]) -> Counts {
    multiset_counts(
        gold.iter().map(tuple_key).collect(),
        pred.iter().map(tuple_key).collect(),
    )
}

/// Exact-match span scoring over one span list pair.
pub fn score_spans(gold: &[Span], pred: &[Span]) -> TallyScore {
    TallyScore::from_counts(span_counts(gold, pred))
}

/// Exact-match tuple scoring over one tuple list pair.
pub fn score_tuples(gold: &[Tuple], pred: &[Tuple]) -> TallyScore {
    TallyScore::from_counts(tuple_counts(gold, pred))
}

/// Position-wise tag accuracy in micro form: a matching position is a tp and a
/// differing one both a fp and a fn, so P = R = accuracy when lengths agree.
/// Missing positions (short predictions, missing sentences) are fn; surplus
/// positions are fp.
pub fn score_tags(gold: &[Vec<String>], pred: &[Vec<String>]) -> TallyScore {
    let mut counts = Counts::default();
    for k in 0..gold.len().max(pred.len()) {
        let g = gold.get(k).map_or(&[][..], |v| v.as_slice());
        let p = pred.get(k).map_or(&[][..], |v| v.as_slice());
        let shared = g.len().min(p.len());
        let tp = (0..shared).filter(|&i| g[i] == p[i]).count() as u64;
        counts.tp += tp;
        counts.fp += p.len() as u64 - tp;
        counts.fn_ += g.len() as u64 - tp;
    }
    TallyScore::from_counts(counts)
}

/// Chunk scoring plus the BIO repairs each side needed.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkScore {
    pub score: TallyScore,
    pub gold_repairs: usize,
    pub pred_repairs: usize,
}

/// Chunking evaluation: both tag sequences become (type, range) spans per
/// sentence and the span multisets are compared, so one boundary error costs
/// both a fp and a fn. Sentence-count mismatches follow the [`score_tags`]
/// rule: whole missing sentences are fn, surplus ones fp.
pub fn score_chunks(gold: &[Vec<String>], pred: &[Vec<String>]) -> Result<ChunkScore, BioError> {
    let mut counts = Counts::default();
    let mut gold_repairs = 0usize;
    let mut pred_repairs = 0usize;
    let empty: Vec<String> = Vec::new();
    for k in 0..gold.len().max(pred.len()) {
        let (g_runs, g_rep) = bio_runs(gold.get(k).unwrap_or(&empty))?;
        let (p_runs, p_rep) = bio_runs(pred.get(k).unwrap_or(&empty))?;
        gold_repairs += g_rep;
        pred_repairs += p_rep;
        counts.add(multiset_counts(g_runs, p_runs));
    }
    Ok(ChunkScore {
        score: TallyScore::from_counts(counts),
        gold_repairs,
        pred_repairs,
    })
}

/// Sentence-boundary scoring over line-segmented text: a boundary sits after
/// the last token of every line but the final one, and empty lines contribute
/// nothing. When the two texts disagree on the token stream itself, tokens are
/// aligned as in restoration scoring and a boundary after an altered, dropped,
/// or hallucinated token counts against the side that produced it.
pub fn score_boundaries(gold: &str, pred: &str) -> TallyScore {
    let (g_tokens, g_bounds) = line_boundaries(gold);
    let (p_tokens, p_bounds) = line_boundaries(pred);
    let alignment = align_token_streams(&g_tokens, &p_tokens);
    let mut pred_to_gold: HashMap<usize, usize> = HashMap::new();
    for (i, fate) in alignment.mapping.iter().enumerate() {
        if let HypAlignment::Match(j) = fate {
            pred_to_gold.insert(*j, i);
        }
    }
    let mut counts = Counts::default();
    for j in &p_bounds {
        match pred_to_gold.get(j) {
            Some(i) if g_bounds.contains(i) => counts.tp += 1,
            _ => counts.fp += 1,
        }
    }
    counts.fn_ = g_bounds.len() as u64 - counts.tp;
    TallyScore::from_counts(counts)
}

/// Token stream and boundary set of line-segmented text. A boundary index is
/// the token after which a break occurs; the end of the text is not one.
fn line_boundaries(text: &str) -> (Vec<String>, BTreeSet<usize>) {
    let mut tokens: Vec<String> = Vec::new();
    let mut bounds = BTreeSet::new();
    for line in text.lines() {
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.is_empty() {
            continue;
        }
        if !tokens.is_empty() {
            bounds.insert(tokens.len() - 1);
        }
        tokens.extend(words.iter().map(|w| w.to_string()));
    }
    (tokens, bounds)
}

/// The conventional negative label for relation classification.
pub const DEFAULT_NEGATIVE_LABEL: &str = "no_relation";

#[derive(Debug, Error)]
#[error("gold has {gold} labels, predictions have {pred}")]
pub struct LabelLengthMismatch {
    pub gold: usize,
    pub pred: usize,
}

/// Micro-F1 over instance labels with a negative label excluded from credit:
/// a correct negative earns nothing, predicting the negative is never a fp,
/// and an unrecovered positive is always a fn.
pub fn score_labels(
    gold: &[String],
    pred: &[String],
    negative: &str,
) -> Result<TallyScore, LabelLengthMismatch> {
    if gold.len() != pred.len() {
        return Err(LabelLengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    let mut counts = Counts::default();
    for (g, p) in gold.iter().zip(pred) {
        if g == p {
            if g != negative {
                counts.tp += 1;
            }
        } else {
            if p != negative {
                counts.fp += 1;
            }
            if g != negative {
                counts.fn_ += 1;
            }
        }
    }
    Ok(TallyScore::from_counts(counts))
}
