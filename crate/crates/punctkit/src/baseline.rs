//! An averaged-perceptron restorer.
//!
//! The tagger predicts a joint 9-class label per token — capitalization in
//! {lower, initial, all-caps} × trailing mark in {none, comma, period} — with
//! greedy left-to-right decoding over sparse text features. Quotes and
//! interior apostrophes are deliberately out of scope here (their placement
//! needs paired long-range context this model cannot express); the scorer
//! simply counts them as misses.
//!
//! Training is bitwise deterministic for a fixed (pairs, epochs, seed):
//! per-epoch shuffles come from a seeded ChaCha8 stream, updates are plain
//! ±1 perceptron steps, and prediction uses weights averaged over per-sentence
//! snapshots — so a single sentence seen once averages to exactly its final
//! weights.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{strip_token, Pair};
use crate::labels::{
    apply_cap, apply_labels, derive_labels, tokenize, CapClass, LabeledSequence, Mark, MarkInsert,
    Slot, TokenLabel,
};

/// Feature template version; bump when the feature set changes so stale
/// models are rejected at load time.
pub const TEMPLATE_VERSION: &str = "v1";

/// Model file format version.
pub const FORMAT_VERSION: &str = "v1";

const MODEL_MAGIC: &str = "punctkit-baseline";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BaseCap {
    Lower,
    Initial,
    AllCaps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Trailing {
    None,
    Comma,
    Period,
}

/// The joint 9-class label: one of 3 caps × 3 trailing marks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BaselineLabel {
    pub cap: BaseCap,
    pub trailing: Trailing,
}

impl BaselineLabel {
    pub const ALL: [BaselineLabel; 9] = {
        const CAPS: [BaseCap; 3] = [BaseCap::Lower, BaseCap::Initial, BaseCap::AllCaps];
        const TRAILS: [Trailing; 3] = [Trailing::None, Trailing::Comma, Trailing::Period];
        let mut all = [BaselineLabel { cap: BaseCap::Lower, trailing: Trailing::None }; 9];
        let mut i = 0;
        while i < 9 {
            all[i] = BaselineLabel { cap: CAPS[i / 3], trailing: TRAILS[i % 3] };
            i += 1;
        }
        all
    };

    pub fn name(self) -> &'static str {
        match (self.cap, self.trailing) {
            (BaseCap::Lower, Trailing::None) => "lower/none",
            (BaseCap::Lower, Trailing::Comma) => "lower/comma",
            (BaseCap::Lower, Trailing::Period) => "lower/period",
            (BaseCap::Initial, Trailing::None) => "initial/none",
            (BaseCap::Initial, Trailing::Comma) => "initial/comma",
            (BaseCap::Initial, Trailing::Period) => "initial/period",
            (BaseCap::AllCaps, Trailing::None) => "all_caps/none",
            (BaseCap::AllCaps, Trailing::Comma) => "all_caps/comma",
            (BaseCap::AllCaps, Trailing::Period) => "all_caps/period",
        }
    }

    pub fn from_name(s: &str) -> Option<BaselineLabel> {
        BaselineLabel::ALL.into_iter().find(|l| l.name() == s)
    }

    /// Projects a full token label down to the 9 classes. The cap falls back
    /// to the first 3-class cap that produces the same surface form, else
    /// lowercase; the trailing mark is the first comma/period in the trailing
    /// stack.
    pub fn from_token_label(token: &str, label: &TokenLabel) -> BaselineLabel {
        let cap = match &label.cap {
            CapClass::Lower => BaseCap::Lower,
            CapClass::Initial => BaseCap::Initial,
            CapClass::AllCaps => BaseCap::AllCaps,
            other @ CapClass::Other(_) => {
                let surface = apply_cap(other, token).unwrap_or_else(|_| token.to_string());
                [BaseCap::Initial, BaseCap::AllCaps]
                    .into_iter()
                    .find(|&bc| {
                        apply_cap(&cap_class(bc), token).as_deref() == Ok(surface.as_str())
                    })
                    .unwrap_or(BaseCap::Lower)
            }
        };
        let mut trailing_marks: Vec<(usize, Mark)> = label
            .inserts
            .iter()
            .filter_map(|i| match i.slot {
                Slot::Trailing(rank) => Some((rank, i.mark)),
                _ => None,
            })
            .collect();
        trailing_marks.sort();
        let trailing = trailing_marks
            .iter()
            .find_map(|(_, m)| match m {
                Mark::Comma => Some(Trailing::Comma),
                Mark::Period => Some(Trailing::Period),
                _ => None,
            })
            .unwrap_or(Trailing::None);
        BaselineLabel { cap, trailing }
    }
}

impl fmt::Display for BaselineLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn cap_class(cap: BaseCap) -> CapClass {
    match cap {
        BaseCap::Lower => CapClass::Lower,
        BaseCap::Initial => CapClass::Initial,
        BaseCap::AllCaps => CapClass::AllCaps,
    }
}

/// Sparse binary features; each key contributes weight 1.
pub type FeatureVector = Vec<String>;

/// Feature template v1. `prev` is the previously *predicted* label (greedy
/// decoding), `None` at the first token.
pub fn extract_features(
    tokens: &[String],
    i: usize,
    prev: Option<BaselineLabel>,
) -> FeatureVector {
    let token = tokens[i].as_str();
    let chars: Vec<char> = token.chars().collect();
    let prev_tok = if i == 0 { "<S>" } else { tokens[i - 1].as_str() };
    let next_tok = tokens.get(i + 1).map_or("</S>", |t| t.as_str());
    let prev_lab = prev.map_or("<S>", |l| l.name());

    let mut f = Vec::with_capacity(16);
    f.push("bias".to_string());
    f.push(format!("w={token}"));
    for k in 1..=3usize.min(chars.len()) {
        f.push(format!("pre{k}={}", chars[..k].iter().collect::<String>()));
        f.push(format!(
            "suf{k}={}",
            chars[chars.len() - k..].iter().collect::<String>()
        ));
    }
    if i == 0 {
        f.push("first=1".to_string());
    }
    f.push(format!("w-1={prev_tok}"));
    f.push(format!("w+1={next_tok}"));
    if chars.iter().any(|c| c.is_ascii_digit()) {
        f.push("digit=1".to_string());
    }
    f.push(format!("prev_lab={prev_lab}"));
    f.push(format!("prev_lab+w={prev_lab}+{token}"));
    f.push(format!("w-1+w={prev_tok}+{token}"));
    f
}

/// Weights per feature key: one value per label, indexed by position in the
/// model's label set.
type WeightTable = HashMap<String, Vec<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    /// Prediction order: ties in the argmax go to the earliest label here.
    /// Training orders this by gold-label frequency (descending), so a
    /// zero-weight model predicts the most frequent class.
    pub label_set: Vec<BaselineLabel>,
    /// Raw final weights (kept for inspection and exact resumability).
    pub weights: WeightTable,
    /// Averaged weights; prediction uses these.
    pub averaged: WeightTable,
    pub epochs: u32,
    pub seed: u64,
    pub template_version: String,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("no trainable pairs: all {skipped} pairs failed label derivation")]
    NoDerivablePairs { skipped: usize },
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: BaselineModel,
    /// Pairs dropped because their labels could not be derived.
    pub skipped_pairs: usize,
    pub trained_pairs: usize,
}

/// One training sentence: source tokens plus gold 9-class labels.
struct Sentence {
    tokens: Vec<String>,
    gold: Vec<BaselineLabel>,
}

fn reduce_sequence(seq: &LabeledSequence) -> Sentence {
    let gold = seq
        .tokens
        .iter()
        .zip(seq.labels.iter())
        .map(|(t, l)| BaselineLabel::from_token_label(t, l))
        .collect();
    Sentence {
        tokens: seq.tokens.clone(),
        gold,
    }
}

fn label_scores(table: &WeightTable, label_count: usize, features: &FeatureVector) -> Vec<f64> {
    let mut scores = vec![0.0f64; label_count];
    for key in features {
        if let Some(ws) = table.get(key) {
            for (c, w) in ws.iter().enumerate() {
                scores[c] += w;
            }
        }
    }
    scores
}

/// Index of the best-scoring label; strict > keeps the earliest on ties.
fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (c, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = c;
        }
    }
    best
}

/// Trains the tagger. Pairs whose labels cannot be derived are skipped and
/// counted. Deterministic: the same (pairs, epochs, seed) produces a
/// byte-identical model.
pub fn train(pairs: &[Pair], epochs: u32, seed: u64) -> Result<TrainOutcome, TrainError> {
    if pairs.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    let mut sentences = Vec::with_capacity(pairs.len());
    let mut skipped = 0usize;
    for pair in pairs {
        match derive_labels(pair) {
            Ok(seq) => sentences.push(reduce_sequence(&seq)),
            Err(_) => skipped += 1,
        }
    }
    if sentences.is_empty() {
        return Err(TrainError::NoDerivablePairs { skipped });
    }

    // Label set ordered by gold frequency (descending, canonical order on
    // ties) so the zero-weight argmax is the majority class.
    let mut freq: BTreeMap<BaselineLabel, u64> = BTreeMap::new();
    for s in &sentences {
        for l in &s.gold {
            *freq.entry(*l).or_default() += 1;
        }
    }
    let mut label_set: Vec<BaselineLabel> = BaselineLabel::ALL.to_vec();
    label_set.sort_by_key(|l| std::cmp::Reverse(freq.get(l).copied().unwrap_or(0)));
    let class_of: HashMap<BaselineLabel, usize> = label_set
        .iter()
        .enumerate()
        .map(|(c, l)| (*l, c))
        .collect();
    let k = label_set.len();

    let mut weights: WeightTable = HashMap::new();
    // Averaging bookkeeping: totals accumulate weight × (sentences the value
    // survived); stamps remember the snapshot tick of the last change.
    let mut totals: WeightTable = HashMap::new();
    let mut stamps: HashMap<String, Vec<u64>> = HashMap::new();
    let mut tick = 0u64; // sentences processed so far

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &si in &order {
            let sentence = &sentences[si];
            let mut prev: Option<BaselineLabel> = None;
            for i in 0..sentence.tokens.len() {
                let features = extract_features(&sentence.tokens, i, prev);
                let scores = label_scores(&weights, k, &features);
                let guess_c = argmax(&scores);
                let gold_c = class_of[&sentence.gold[i]];
                // Update on a miss, and also when the gold label merely *ties*
                // its best competitor: a decision that survives only on the
                // tie-break has no margin, and the averaged weights would not
                // reliably preserve it. Pushing the tie apart keeps converged
                // weights strictly separating.
                let rival = if guess_c != gold_c {
                    Some(guess_c)
                } else {
                    let mut best = usize::from(gold_c == 0);
                    for c in 0..k {
                        if c != gold_c && scores[c] > scores[best] {
                            best = c;
                        }
                    }
                    (scores[best] >= scores[gold_c]).then_some(best)
                };
                if let Some(rival_c) = rival {
                    for key in &features {
                        for (c, delta) in [(gold_c, 1.0), (rival_c, -1.0)] {
                            let w = weights.entry(key.clone()).or_insert_with(|| vec![0.0; k]);
                            let t = totals.entry(key.clone()).or_insert_with(|| vec![0.0; k]);
                            let s = stamps.entry(key.clone()).or_insert_with(|| vec![0; k]);
                            t[c] += (tick - s[c]) as f64 * w[c];
                            s[c] = tick;
                            w[c] += delta;
                        }
                    }
                }
                prev = Some(label_set[guess_c]);
            }
            tick += 1;
        }
    }

    // Close out the averages over all per-sentence snapshots.
    let mut averaged: WeightTable = HashMap::new();
    if tick > 0 {
        for (key, ws) in &weights {
            let t = &totals[key];
            let s = &stamps[key];
            let avg: Vec<f64> = (0..k)
                .map(|c| (t[c] + (tick - s[c]) as f64 * ws[c]) / tick as f64)
                .collect();
            averaged.insert(key.clone(), avg);
        }
    }

    Ok(TrainOutcome {
        model: BaselineModel {
            label_set,
            weights,
            averaged,
            epochs,
            seed,
            template_version: TEMPLATE_VERSION.to_string(),
        },
        skipped_pairs: skipped,
        trained_pairs: sentences.len(),
    })
}

/// Greedy left-to-right tagging over averaged weights. The output is a full
/// label sequence (quote and interior slots always empty). A predicted cap
/// that would not survive the strip transform (caps that expand, like ß → SS)
/// is demoted to lowercase so restoration stays invertible.
pub fn predict(model: &BaselineModel, source: &str) -> LabeledSequence {
    let tokens = tokenize(source);
    let k = model.label_set.len();
    let mut labels = Vec::with_capacity(tokens.len());
    let mut prev: Option<BaselineLabel> = None;
    for i in 0..tokens.len() {
        let features = extract_features(&tokens, i, prev);
        let c = argmax(&label_scores(&model.averaged, k, &features));
        let label = model.label_set[c];
        prev = Some(label);

        let mut cap = cap_class(label.cap);
        let recased = apply_cap(&cap, &tokens[i]).unwrap_or_else(|_| tokens[i].clone());
        if strip_token(&recased) != tokens[i] {
            cap = CapClass::Lower;
        }
        let inserts = match label.trailing {
            Trailing::None => Vec::new(),
            Trailing::Comma => vec![MarkInsert { slot: Slot::Trailing(0), mark: Mark::Comma }],
            Trailing::Period => vec![MarkInsert { slot: Slot::Trailing(0), mark: Mark::Period }],
        };
        labels.push(TokenLabel { cap, inserts });
    }
    LabeledSequence {
        pair_id: String::new(),
        tokens,
        labels,
    }
}

/// Predicts and renders the restored text.
pub fn restore(model: &BaselineModel, source: &str) -> String {
    let seq = predict(model, source);
    apply_labels(&seq.tokens, &seq.labels)
        .expect("predicted labels are structurally valid by construction")
}

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a model file: expected header {MODEL_MAGIC:?}")]
    BadMagic,
    #[error("unsupported model format version {found:?} (this build reads {FORMAT_VERSION:?})")]
    FormatVersion { found: String },
    #[error(
        "feature template mismatch: model was trained with {found:?}, this build extracts {TEMPLATE_VERSION:?}"
    )]
    TemplateVersion { found: String },
    #[error("malformed model file at line {line}: {what}")]
    Malformed { line: usize, what: String },
}

/// Renders the model as its line-oriented text format: a header, the label
/// set, training metadata, then one `raw`/`avg` line per feature key with one
/// weight per label. Keys are sorted, so equal models serialize identically.
pub fn model_to_string(model: &BaselineModel) -> String {
    let mut out = String::new();
    out.push_str(&format!("{MODEL_MAGIC} {FORMAT_VERSION}\n"));
    out.push_str(&format!("template {}\n", model.template_version));
    out.push_str("labels");
    for l in &model.label_set {
        out.push(' ');
        out.push_str(l.name());
    }
    out.push('\n');
    out.push_str(&format!("epochs {}\n", model.epochs));
    out.push_str(&format!("seed {}\n", model.seed));
    for (section, table) in [("raw", &model.weights), ("avg", &model.averaged)] {
        let mut keys: Vec<&String> = table.keys().collect();
        keys.sort();
        for key in keys {
            out.push_str(section);
            out.push(' ');
            out.push_str(key);
            for w in &table[key] {
                out.push(' ');
                out.push_str(&w.to_string());
            }
            out.push('\n');
        }
    }
    out
}

/// Parses the text format produced by [`model_to_string`].
pub fn model_from_str(text: &str) -> Result<BaselineModel, ModelIoError> {
    let mut lines = text.lines().enumerate();
    let bad = |line: usize, what: &str| ModelIoError::Malformed {
        line: line + 1,
        what: what.to_string(),
    };

    let (n0, header) = lines.next().ok_or_else(|| bad(0, "empty file"))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(MODEL_MAGIC) {
        return Err(ModelIoError::BadMagic);
    }
    match parts.next() {
        Some(v) if v == FORMAT_VERSION => {}
        Some(v) => {
            return Err(ModelIoError::FormatVersion { found: v.to_string() });
        }
        None => return Err(bad(n0, "missing format version")),
    }

    let (n1, tline) = lines.next().ok_or_else(|| bad(1, "missing template line"))?;
    let template_version = match tline.strip_prefix("template ") {
        Some(v) if v == TEMPLATE_VERSION => v.to_string(),
        Some(v) => {
            return Err(ModelIoError::TemplateVersion { found: v.to_string() });
        }
        None => return Err(bad(n1, "expected `template <version>`")),
    };

    let (n2, lline) = lines.next().ok_or_else(|| bad(2, "missing labels line"))?;
    let label_names = lline
        .strip_prefix("labels")
        .ok_or_else(|| bad(n2, "expected `labels …`"))?;
    let mut label_set = Vec::new();
    for name in label_names.split_whitespace() {
        label_set.push(
            BaselineLabel::from_name(name)
                .ok_or_else(|| bad(n2, &format!("unknown label {name:?}")))?,
        );
    }
    if label_set.is_empty() {
        return Err(bad(n2, "empty label set"));
    }
    let k = label_set.len();

    let (n3, eline) = lines.next().ok_or_else(|| bad(3, "missing epochs line"))?;
    let epochs: u32 = eline
        .strip_prefix("epochs ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad(n3, "expected `epochs <n>`"))?;
    let (n4, sline) = lines.next().ok_or_else(|| bad(4, "missing seed line"))?;
    let seed: u64 = sline
        .strip_prefix("seed ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad(n4, "expected `seed <n>`"))?;

    let mut weights: WeightTable = HashMap::new();
    let mut averaged: WeightTable = HashMap::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let section = fields.next().unwrap_or_default();
        let table = match section {
            "raw" => &mut weights,
            "avg" => &mut averaged,
            other => return Err(bad(n, &format!("unknown section {other:?}"))),
        };
        let key = fields
            .next()
            .ok_or_else(|| bad(n, "missing feature key"))?
            .to_string();
        let ws: Result<Vec<f64>, _> = fields.map(str::parse::<f64>).collect();
        let ws = ws.map_err(|e| bad(n, &format!("bad weight: {e}")))?;
        if ws.len() != k {
            return Err(bad(n, &format!("expected {k} weights, got {}", ws.len())));
        }
        if table.insert(key.clone(), ws).is_some() {
            return Err(bad(n, &format!("duplicate key {key:?}")));
        }
    }

    Ok(BaselineModel {
        label_set,
        weights,
        averaged,
        epochs,
        seed,
        template_version,
    })
}

pub fn save_model(model: &BaselineModel, path: &Path) -> Result<(), ModelIoError> {
    crate::io::write_atomic(path, &model_to_string(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<BaselineModel, ModelIoError> {
    let text = std::fs::read_to_string(path)?;
    model_from_str(&text)
}
