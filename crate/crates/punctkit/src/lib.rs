//! punctkit — punctuation restoration as a learning objective, at desk scale.
//!
//! The toolkit covers the whole loop:
//!
//! * [`corpus`] — deterministic corpus construction: normalize quotes, split
//!   documents into word-limited excerpts, strip `{ , . ' " }` and lowercase
//!   to produce (source, target) pairs, and partition into train/dev/test.
//! * [`labels`] — a lossless token-level encoding of restoration decisions
//!   (capitalization class + positional mark insertions) with exact
//!   derive/apply round-tripping.
//! * [`scorer`] — operation-level precision/recall/F1 over restoration
//!   decisions, for label files or free-text output from any restorer.
//! * [`baseline`] — an averaged-perceptron restorer that trains in seconds
//!   and produces hypotheses the scorer understands.
//! * [`tasks`] — readers, linearizers, delinearizers, and scorers for
//!   downstream structure tasks (NER spans, OpenIE tuples, tag sequences,
//!   sentence boundaries, relation labels).
//! * [`report`] — evaluation report rows and table rendering.
//!
//! The `punctkit` binary (see [`cli`]) wires these into reproducible
//! pipelines over JSON-lines files.

pub mod baseline;
pub mod cli;
pub mod corpus;
pub mod io;
pub mod labels;
pub mod report;
pub mod scorer;
pub mod tasks;
