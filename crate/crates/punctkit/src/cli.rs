//! The command-line surface: argument parsing, file plumbing, and report
//! assembly.
//!
//! Every artifact goes through an atomic write, so a failing command never
//! leaves a truncated output behind. Usage errors exit 2, runtime errors exit
//! 1 with a single-line `error: …` on stderr, and anything stochastic takes an
//! explicit seed, so the same invocation always produces the same bytes.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::baseline;
use crate::corpus::{self, Document, Pair};
use crate::io::{read_jsonl, write_atomic, write_jsonl};
use crate::labels::{derive_labels, LabeledSequence};
use crate::report::{config_hash, format_metric, render_report, Report, ReportRow, ReportStyle};
use crate::scorer::{score_corpus, Counts, CorpusScore, Hypothesis, TallyScore};
use crate::tasks::{
    self, delinearize, delinearize_tags, linearize_multitask, linearize_ner, linearize_openie,
    linearize_tags, read_conll, score_boundaries, score_chunks, score_labels, score_tags,
    span_counts, spans_from_bio, tuple_counts, ConllSchema, DelinearizedRecord, LinearizedRecord,
    Prediction, TagsRecord, TaskKind, TaskRecord,
};

/// Tool version plus the artifact format versions it reads and writes.
fn long_version() -> String {
    format!(
        "{} (model format {}, feature template {})",
        env!("CARGO_PKG_VERSION"),
        baseline::FORMAT_VERSION,
        baseline::TEMPLATE_VERSION,
    )
}

#[derive(Debug, Parser)]
#[command(
    name = "punctkit",
    version = long_version(),
    about = "Punctuation-restoration corpus tools, baseline tagger, and task scorers"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Build depunctuated training pairs from raw documents.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Derive token-level restoration labels from pairs.
    #[command(subcommand)]
    Labels(LabelsCmd),
    /// Train and run the averaged-perceptron restorer.
    #[command(subcommand)]
    Baseline(BaselineCmd),
    /// Ingest, linearize, and parse structure-task data.
    #[command(subcommand)]
    Task(TaskCmd),
    /// Score hypotheses against gold annotations.
    #[command(subcommand)]
    Score(ScoreCmd),
}

#[derive(Debug, Subcommand)]
enum CorpusCmd {
    /// Normalize documents, split excerpts, build pairs, and partition them.
    Build(CorpusBuildArgs),
}

#[derive(Debug, Args)]
struct CorpusBuildArgs {
    /// JSON-lines documents: {"id", "text"}
    #[arg(long)]
    input: PathBuf,
    /// Pairs file; splits land beside it as <name>.train/.dev/.test.jsonl
    #[arg(long)]
    out: PathBuf,
    /// Excerpt size in whitespace-separated words
    #[arg(long, default_value_t = corpus::DEFAULT_WORD_LIMIT)]
    limit: usize,
    /// Dev-split size in pairs
    #[arg(long, default_value_t = 1000)]
    dev: usize,
    /// Test-split size in pairs
    #[arg(long, default_value_t = 1000)]
    test: usize,
    /// Shuffle seed for the split partition
    #[arg(long)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum LabelsCmd {
    /// Derive lossless labels for every pair.
    Derive(LabelsDeriveArgs),
}

#[derive(Debug, Args)]
struct LabelsDeriveArgs {
    /// JSON-lines pairs: {"id", "source", "target"}
    #[arg(long)]
    pairs: PathBuf,
    /// Labels file to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum BaselineCmd {
    /// Train the averaged perceptron on pairs.
    Train(BaselineTrainArgs),
    /// Restore punctuation and casing for new sources.
    Restore(BaselineRestoreArgs),
}

#[derive(Debug, Args)]
struct BaselineTrainArgs {
    /// JSON-lines training pairs
    #[arg(long)]
    pairs: PathBuf,
    /// Passes over the shuffled training set
    #[arg(long, default_value_t = 10)]
    epochs: u32,
    /// Shuffle seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Model file to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BaselineRestoreArgs {
    /// Model file from `baseline train`
    #[arg(long)]
    model: PathBuf,
    /// Pairs JSON-lines (the "source" field is used) or plain text, one
    /// source per line
    #[arg(long)]
    source: PathBuf,
    /// Hypotheses file to write: {"id", "restored"}
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum TaskCmd {
    /// Convert a column corpus into task JSON-lines.
    Ingest(TaskIngestArgs),
    /// Render task records as flat target strings.
    Linearize(TaskLinearizeArgs),
    /// Parse model output back into structures.
    Delinearize(TaskDelinearizeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConllFormat {
    Conll03,
    Conll00,
}

#[derive(Debug, Args)]
struct TaskIngestArgs {
    /// Column layout of the input file
    #[arg(long, value_enum)]
    format: ConllFormat,
    /// Column corpus to read
    #[arg(long = "in")]
    input: PathBuf,
    /// Task JSON-lines file to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LinearKind {
    Ner,
    Openie,
    Tags,
    Multitask,
}

#[derive(Debug, Args)]
struct TaskLinearizeArgs {
    /// Output shape to produce
    #[arg(long, value_enum)]
    kind: LinearKind,
    /// Task JSON-lines to read
    #[arg(long = "in")]
    input: PathBuf,
    /// Linearized JSON-lines to write: {"id", "input", "target"}
    #[arg(long)]
    out: PathBuf,
    /// Tag column to linearize (required for --kind tags)
    #[arg(long, required_if_eq("kind", "tags"))]
    column: Option<String>,
}

#[derive(Debug, Args)]
struct TaskDelinearizeArgs {
    /// Output shape to expect
    #[arg(long, value_enum)]
    kind: LinearKind,
    /// Predictions JSON-lines to read: {"id", "output"}
    #[arg(long = "in")]
    input: PathBuf,
    /// Parsed structures to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum ScoreCmd {
    /// Operation-level P/R/F1 of restoration hypotheses.
    Restoration(ScoreRestorationArgs),
    /// Structure-task P/R/F1 against gold annotations.
    Task(ScoreTaskArgs),
}

#[derive(Debug, Args)]
struct ScoreRestorationArgs {
    /// Gold labels JSON-lines from `labels derive`
    #[arg(long)]
    gold: PathBuf,
    /// Hypotheses JSON-lines: {"id", "restored"} or predicted labels
    #[arg(long)]
    hyp: PathBuf,
    /// JSON report to write
    #[arg(long)]
    report: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScoreKind {
    Spans,
    Tuples,
    Tags,
    Chunks,
    Boundaries,
    Labels,
}

impl ScoreKind {
    fn name(self) -> &'static str {
        match self {
            ScoreKind::Spans => "spans",
            ScoreKind::Tuples => "tuples",
            ScoreKind::Tags => "tags",
            ScoreKind::Chunks => "chunks",
            ScoreKind::Boundaries => "boundaries",
            ScoreKind::Labels => "labels",
        }
    }
}

#[derive(Debug, Args)]
struct ScoreTaskArgs {
    /// What to score
    #[arg(long, value_enum)]
    kind: ScoreKind,
    /// Gold data: task JSON-lines for spans/tuples/tags/chunks, line-segmented
    /// text for boundaries, one label per line for labels
    #[arg(long)]
    gold: PathBuf,
    /// Predictions: {"id", "output"} JSON-lines, or plain text mirroring the
    /// gold shape for boundaries/labels
    #[arg(long)]
    pred: PathBuf,
    /// JSON report to write
    #[arg(long)]
    report: PathBuf,
    /// Gold tag column (default: "pos" for tags, "chunk" for chunks)
    #[arg(long)]
    column: Option<String>,
    /// Label excluded from credit when scoring labels
    #[arg(long, default_value = tasks::DEFAULT_NEGATIVE_LABEL)]
    negative_label: String,
    /// Task name for the report row (default: the kind)
    #[arg(long)]
    task_name: Option<String>,
    /// Training-set name for the report row
    #[arg(long, default_value = "-")]
    training_set: String,
    /// Evaluation-set name for the report row (default: the gold file stem)
    #[arg(long)]
    evaluation_set: Option<String>,
    /// Mark the row as in-distribution
    #[arg(long)]
    in_distribution: bool,
}

/// Parses `argv` and runs the selected command. Returns the process exit
/// code: 0 on success, 1 on runtime errors, 2 on usage errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    init_thread_pool();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {}", single_line(&err));
            1
        }
    }
}

/// Caps rayon's global pool when PUNCTKIT_THREADS is set to a positive count.
fn init_thread_pool() {
    let Ok(raw) = std::env::var("PUNCTKIT_THREADS") else {
        return;
    };
    match raw.parse::<usize>() {
        Ok(n) if n > 0 => {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
        _ => eprintln!("warning: ignoring PUNCTKIT_THREADS={raw:?} (want a positive integer)"),
    }
}

/// Flattens an error chain onto one machine-splittable line.
fn single_line(err: &anyhow::Error) -> String {
    let mut out = err.to_string();
    for cause in err.chain().skip(1) {
        out.push_str(": ");
        out.push_str(&cause.to_string());
    }
    out.replace('\n', " ")
}

fn dispatch(command: Cmd) -> Result<()> {
    match command {
        Cmd::Corpus(CorpusCmd::Build(args)) => corpus_build(args),
        Cmd::Labels(LabelsCmd::Derive(args)) => labels_derive(args),
        Cmd::Baseline(BaselineCmd::Train(args)) => baseline_train(args),
        Cmd::Baseline(BaselineCmd::Restore(args)) => baseline_restore(args),
        Cmd::Task(TaskCmd::Ingest(args)) => task_ingest(args),
        Cmd::Task(TaskCmd::Linearize(args)) => task_linearize(args),
        Cmd::Task(TaskCmd::Delinearize(args)) => task_delinearize(args),
        Cmd::Score(ScoreCmd::Restoration(args)) => score_restoration_cmd(args),
        Cmd::Score(ScoreCmd::Task(args)) => score_task_cmd(args),
    }
}

// ---------------------------------------------------------------------------
// corpus build

/// `<dir>/<stem>.<split>.<ext>` next to the main pairs file.
fn split_path(out: &Path, split: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.{split}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{split}"),
    };
    out.with_file_name(name)
}

fn corpus_build(args: CorpusBuildArgs) -> Result<()> {
    let docs: Vec<Document> = read_jsonl(&args.input)?;
    let built = corpus::build_pairs(&docs, args.limit);
    let splits = corpus::partition(built.pairs.clone(), args.dev, args.test, args.seed)?;
    write_jsonl(&args.out, &built.pairs)?;
    write_jsonl(&split_path(&args.out, "train"), &splits.train)?;
    write_jsonl(&split_path(&args.out, "dev"), &splits.dev)?;
    write_jsonl(&split_path(&args.out, "test"), &splits.test)?;
    println!(
        "built {} pairs from {} documents ({} empty excerpts dropped); \
         train {} / dev {} / test {}",
        built.pairs.len(),
        docs.len(),
        built.dropped,
        splits.train.len(),
        splits.dev.len(),
        splits.test.len(),
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// labels derive

fn labels_derive(args: LabelsDeriveArgs) -> Result<()> {
    let pairs: Vec<Pair> = read_jsonl(&args.pairs)?;
    let labels = pairs
        .iter()
        .map(|pair| derive_labels(pair).with_context(|| format!("pair {}", pair.id)))
        .collect::<Result<Vec<_>>>()?;
    write_jsonl(&args.out, &labels)?;
    println!("derived labels for {} pairs", labels.len());
    Ok(())
}

// ---------------------------------------------------------------------------
// baseline train / restore

fn baseline_train(args: BaselineTrainArgs) -> Result<()> {
    let pairs: Vec<Pair> = read_jsonl(&args.pairs)?;
    let outcome = baseline::train(&pairs, args.epochs, args.seed)?;
    baseline::save_model(&outcome.model, &args.out)?;
    println!(
        "trained on {} pairs ({} skipped) for {} epochs, wrote {}",
        outcome.trained_pairs,
        outcome.skipped_pairs,
        args.epochs,
        args.out.display(),
    );
    Ok(())
}

/// A line of a restore input file in JSON-lines form; extra fields (such as a
/// pair's "target") are ignored.
#[derive(Debug, Deserialize)]
struct SourceRecord {
    id: String,
    source: String,
}

/// One restored hypothesis on the wire.
#[derive(Debug, Serialize)]
struct RestoredRecord {
    id: String,
    restored: String,
}

/// Reads restore input as JSON-lines when the first non-blank line is a JSON
/// object, else as plain text with one source per line (ids are line
/// positions).
fn read_sources(path: &Path) -> Result<Vec<(String, String)>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("read {}", path.display()))?;
    let jsonl = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .is_some_and(|l| l.trim_start().starts_with('{'));
    if jsonl {
        let records: Vec<SourceRecord> = read_jsonl(path)?;
        Ok(records.into_iter().map(|r| (r.id, r.source)).collect())
    } else {
        Ok(text
            .lines()
            .enumerate()
            .filter(|(_, line)| !line.trim().is_empty())
            .map(|(i, line)| (i.to_string(), line.to_string()))
            .collect())
    }
}

fn baseline_restore(args: BaselineRestoreArgs) -> Result<()> {
    let model = baseline::load_model(&args.model)?;
    let sources = read_sources(&args.source)?;
    let restored: Vec<RestoredRecord> = sources
        .into_iter()
        .map(|(id, source)| RestoredRecord {
            id,
            restored: baseline::restore(&model, &source),
        })
        .collect();
    write_jsonl(&args.out, &restored)?;
    println!("restored {} sources", restored.len());
    Ok(())
}

// ---------------------------------------------------------------------------
// task ingest / linearize / delinearize

fn task_ingest(args: TaskIngestArgs) -> Result<()> {
    let schema = match args.format {
        ConllFormat::Conll03 => ConllSchema::Conll03,
        ConllFormat::Conll00 => ConllSchema::Conll00,
    };
    let records = read_conll(&args.input, schema)
        .with_context(|| format!("read {}", args.input.display()))?;
    write_jsonl(&args.out, &records)?;
    println!("ingested {} sentences", records.len());
    Ok(())
}

/// Reads and validates task records.
fn read_task_records(path: &Path) -> Result<Vec<TaskRecord>> {
    let mut records: Vec<TaskRecord> = read_jsonl(path)?;
    for record in &mut records {
        record.normalize()?;
    }
    Ok(records)
}

/// The named column, with a per-record error message.
fn record_column<'r>(record: &'r TaskRecord, name: &str) -> Result<&'r [String]> {
    record
        .column(name)
        .with_context(|| format!("record {}: no {name:?} column", record.id))
}

fn task_linearize(args: TaskLinearizeArgs) -> Result<()> {
    let records = read_task_records(&args.input)?;
    let mut repairs = 0usize;
    let mut lines = Vec::with_capacity(records.len());
    for record in &records {
        let target = match args.kind {
            LinearKind::Ner => {
                let bio = spans_from_bio(&record.tokens, record_column(record, "ner")?)
                    .with_context(|| format!("record {}", record.id))?;
                repairs += bio.repairs;
                linearize_ner(&bio.spans)
            }
            LinearKind::Openie => linearize_openie(&record.tuples),
            LinearKind::Tags => {
                let column = args.column.as_deref().expect("clap requires --column");
                linearize_tags(record_column(record, column)?)
            }
            LinearKind::Multitask => {
                let bio = spans_from_bio(&record.tokens, record_column(record, "ner")?)
                    .with_context(|| format!("record {}", record.id))?;
                repairs += bio.repairs;
                linearize_multitask(&bio.spans, &record.tuples)
            }
        };
        lines.push(LinearizedRecord {
            id: record.id.clone(),
            input: record.raw_text.clone(),
            target,
        });
    }
    write_jsonl(&args.out, &lines)?;
    println!("linearized {} records ({repairs} tag repairs)", lines.len());
    Ok(())
}

fn task_delinearize(args: TaskDelinearizeArgs) -> Result<()> {
    let predictions: Vec<Prediction> = read_jsonl(&args.input)?;
    if args.kind == LinearKind::Tags {
        let parsed: Vec<TagsRecord> = predictions
            .into_iter()
            .map(|p| TagsRecord {
                id: p.id,
                tags: delinearize_tags(&p.output),
            })
            .collect();
        write_jsonl(&args.out, &parsed)?;
        println!("parsed {} predictions", parsed.len());
        return Ok(());
    }
    let kind = match args.kind {
        LinearKind::Ner => TaskKind::Ner,
        LinearKind::Openie => TaskKind::OpenIe,
        LinearKind::Multitask => TaskKind::Multitask,
        LinearKind::Tags => unreachable!("handled above"),
    };
    let mut malformed = 0usize;
    let mut unbalanced = 0usize;
    let parsed: Vec<DelinearizedRecord> = predictions
        .into_iter()
        .map(|p| {
            let got = delinearize(&p.output, kind);
            malformed += got.diagnostics.malformed_groups;
            unbalanced += got.diagnostics.unbalanced;
            DelinearizedRecord {
                id: p.id,
                spans: got.spans,
                tuples: got.tuples,
                diagnostics: got.diagnostics,
            }
        })
        .collect();
    write_jsonl(&args.out, &parsed)?;
    println!(
        "parsed {} predictions ({malformed} malformed groups, {unbalanced} unbalanced)",
        parsed.len(),
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// score restoration

/// The restoration report artifact: corpus score plus provenance.
#[derive(Debug, Serialize)]
struct RestorationReport {
    tool_version: String,
    config_hash: String,
    #[serde(flatten)]
    outcome: CorpusScore,
}

#[derive(Debug, Serialize)]
struct ScoreRestorationConfig<'a> {
    command: &'static str,
    gold: &'a str,
    hyp: &'a str,
}

fn score_restoration_cmd(args: ScoreRestorationArgs) -> Result<()> {
    let golds: Vec<LabeledSequence> = read_jsonl(&args.gold)?;
    let hyps: Vec<Hypothesis> = read_jsonl(&args.hyp)?;
    let outcome = score_corpus(&golds, &hyps)?;
    let report = RestorationReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config_hash(&ScoreRestorationConfig {
            command: "score restoration",
            gold: &args.gold.to_string_lossy(),
            hyp: &args.hyp.to_string_lossy(),
        }),
        outcome,
    };
    let json = serde_json::to_string_pretty(&report)?;
    write_atomic(&args.report, &format!("{json}\n"))
        .with_context(|| format!("write {}", args.report.display()))?;

    let mut table = String::from("Category\ttp\tfp\tfn\tP\tR\tF1\n");
    for (category, tally) in &report.outcome.score.per_category {
        table.push_str(&tally_row(category.name(), tally));
    }
    table.push_str(&tally_row("TOTAL", &report.outcome.score.totals));
    print!("{table}");
    if !report.outcome.missing_hypotheses.is_empty()
        || !report.outcome.undecodable_hypotheses.is_empty()
    {
        println!(
            "note: {} missing and {} undecodable hypotheses scored as misses",
            report.outcome.missing_hypotheses.len(),
            report.outcome.undecodable_hypotheses.len(),
        );
    }
    Ok(())
}

fn tally_row(name: &str, tally: &TallyScore) -> String {
    format!(
        "{name}\t{}\t{}\t{}\t{}\t{}\t{}\n",
        tally.tp,
        tally.fp,
        tally.fn_,
        format_metric(tally.precision),
        format_metric(tally.recall),
        format_metric(tally.f1),
    )
}

// ---------------------------------------------------------------------------
// score task

#[derive(Debug, Serialize)]
struct ScoreTaskConfig<'a> {
    command: &'static str,
    kind: &'a str,
    gold: &'a str,
    pred: &'a str,
    column: Option<&'a str>,
    negative_label: &'a str,
}

/// Predictions keyed by id; duplicates are an input error.
fn prediction_map(predictions: Vec<Prediction>) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for p in predictions {
        if map.insert(p.id.clone(), p.output).is_some() {
            bail!("duplicate prediction id {:?}", p.id);
        }
    }
    Ok(map)
}

/// Tallies plus the diagnostics counters a task scoring run accumulates.
#[derive(Debug, Default)]
struct TaskTally {
    counts: Counts,
    diagnostics: BTreeMap<String, u64>,
}

impl TaskTally {
    fn bump(&mut self, key: &str, n: u64) {
        if n > 0 {
            *self.diagnostics.entry(key.to_string()).or_insert(0) += n;
        }
    }
}

fn score_task_cmd(args: ScoreTaskArgs) -> Result<()> {
    let tally = match args.kind {
        ScoreKind::Spans => score_structures(&args, TaskKind::Ner)?,
        ScoreKind::Tuples => score_structures(&args, TaskKind::OpenIe)?,
        ScoreKind::Tags | ScoreKind::Chunks => score_tag_task(&args)?,
        ScoreKind::Boundaries => {
            let gold = fs::read_to_string(&args.gold)
                .with_context(|| format!("read {}", args.gold.display()))?;
            let pred = fs::read_to_string(&args.pred)
                .with_context(|| format!("read {}", args.pred.display()))?;
            let score = score_boundaries(&gold, &pred);
            TaskTally {
                counts: Counts {
                    tp: score.tp,
                    fp: score.fp,
                    fn_: score.fn_,
                },
                diagnostics: BTreeMap::new(),
            }
        }
        ScoreKind::Labels => {
            let gold = read_label_lines(&args.gold)?;
            let pred = read_label_lines(&args.pred)?;
            let score = score_labels(&gold, &pred, &args.negative_label)?;
            TaskTally {
                counts: Counts {
                    tp: score.tp,
                    fp: score.fp,
                    fn_: score.fn_,
                },
                diagnostics: BTreeMap::new(),
            }
        }
    };

    let evaluation_set = args.evaluation_set.clone().unwrap_or_else(|| {
        args.gold
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "-".to_string())
    });
    let row = ReportRow {
        task: args
            .task_name
            .clone()
            .unwrap_or_else(|| args.kind.name().to_string()),
        training_set: args.training_set.clone(),
        evaluation_set,
        in_distribution: args.in_distribution,
        score: TallyScore::from_counts(tally.counts),
        diagnostics: tally.diagnostics,
    };
    let report = Report::new(
        config_hash(&ScoreTaskConfig {
            command: "score task",
            kind: args.kind.name(),
            gold: &args.gold.to_string_lossy(),
            pred: &args.pred.to_string_lossy(),
            column: args.column.as_deref(),
            negative_label: &args.negative_label,
        }),
        vec![row],
    );
    let json = serde_json::to_string_pretty(&report)?;
    write_atomic(&args.report, &format!("{json}\n"))
        .with_context(|| format!("write {}", args.report.display()))?;
    print!("{}", render_report(&report, ReportStyle::Tsv));
    Ok(())
}

/// Span and tuple scoring: gold structures come from task records, predictions
/// are parsed from flat output; a missing prediction forfeits its gold items
/// and predictions for unknown ids are counted but not scored.
fn score_structures(args: &ScoreTaskArgs, kind: TaskKind) -> Result<TaskTally> {
    let golds = read_task_records(&args.gold)?;
    let mut preds = prediction_map(read_jsonl(&args.pred)?)?;
    let mut tally = TaskTally::default();
    for record in &golds {
        let (gold_spans, gold_tuples) = match kind {
            TaskKind::Ner => {
                let bio = spans_from_bio(&record.tokens, record_column(record, "ner")?)
                    .with_context(|| format!("record {}", record.id))?;
                tally.bump("gold_repairs", bio.repairs as u64);
                (bio.spans, Vec::new())
            }
            _ => (Vec::new(), record.tuples.clone()),
        };
        match preds.remove(&record.id) {
            Some(output) => {
                let got = delinearize(&output, kind);
                tally.bump("malformed_groups", got.diagnostics.malformed_groups as u64);
                tally.bump("unbalanced", got.diagnostics.unbalanced as u64);
                let counts = match kind {
                    TaskKind::Ner => span_counts(&gold_spans, &got.spans),
                    _ => tuple_counts(&gold_tuples, &got.tuples),
                };
                tally.counts.add(counts);
            }
            None => {
                tally.bump("missing_predictions", 1);
                tally.counts.fn_ += (gold_spans.len() + gold_tuples.len()) as u64;
            }
        }
    }
    tally.bump("unmatched_predictions", preds.len() as u64);
    Ok(tally)
}

/// Tag and chunk scoring over per-sentence tag sequences; missing predictions
/// become empty sequences, so their positions all count as misses.
fn score_tag_task(args: &ScoreTaskArgs) -> Result<TaskTally> {
    let default_column = match args.kind {
        ScoreKind::Chunks => "chunk",
        _ => "pos",
    };
    let column = args.column.as_deref().unwrap_or(default_column);
    let golds = read_task_records(&args.gold)?;
    let mut preds = prediction_map(read_jsonl(&args.pred)?)?;
    let mut tally = TaskTally::default();
    let mut gold_seqs = Vec::with_capacity(golds.len());
    let mut pred_seqs = Vec::with_capacity(golds.len());
    for record in &golds {
        gold_seqs.push(record_column(record, column)?.to_vec());
        match preds.remove(&record.id) {
            Some(output) => pred_seqs.push(delinearize_tags(&output)),
            None => {
                tally.bump("missing_predictions", 1);
                pred_seqs.push(Vec::new());
            }
        }
    }
    tally.bump("unmatched_predictions", preds.len() as u64);
    let score = match args.kind {
        ScoreKind::Chunks => {
            let got = score_chunks(&gold_seqs, &pred_seqs)?;
            tally.bump("gold_repairs", got.gold_repairs as u64);
            tally.bump("pred_repairs", got.pred_repairs as u64);
            got.score
        }
        _ => score_tags(&gold_seqs, &pred_seqs),
    };
    tally.counts = Counts {
        tp: score.tp,
        fp: score.fp,
        fn_: score.fn_,
    };
    Ok(tally)
}

/// One label per line; blank lines are ignored.
fn read_label_lines(path: &Path) -> Result<Vec<String>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("read {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_paths_sit_beside_the_pairs_file() {
        assert_eq!(
            split_path(Path::new("/x/pairs.jsonl"), "train"),
            PathBuf::from("/x/pairs.train.jsonl")
        );
        assert_eq!(
            split_path(Path::new("pairs"), "dev"),
            PathBuf::from("pairs.dev")
        );
    }

    #[test]
    fn cli_parses_the_documented_invocations() {
        for argv in [
            vec![
                "punctkit", "corpus", "build", "--input", "d.jsonl", "--out", "p.jsonl",
                "--limit", "150", "--dev", "1000", "--test", "1000", "--seed", "7",
            ],
            vec!["punctkit", "labels", "derive", "--pairs", "p", "--out", "l"],
            vec![
                "punctkit", "baseline", "train", "--pairs", "p", "--epochs", "10",
                "--seed", "42", "--out", "model.pk",
            ],
            vec![
                "punctkit", "baseline", "restore", "--model", "m", "--source", "s",
                "--out", "h.jsonl",
            ],
            vec![
                "punctkit", "task", "ingest", "--format", "conll03", "--in", "f",
                "--out", "t.jsonl",
            ],
            vec![
                "punctkit", "task", "linearize", "--kind", "multitask", "--in", "t",
                "--out", "lin.jsonl",
            ],
            vec![
                "punctkit", "task", "delinearize", "--kind", "ner", "--in", "pred",
                "--out", "parsed.jsonl",
            ],
            vec![
                "punctkit", "score", "restoration", "--gold", "g", "--hyp", "h",
                "--report", "r.json",
            ],
            vec![
                "punctkit", "score", "task", "--kind", "boundaries", "--gold", "g",
                "--pred", "p", "--report", "r.json",
            ],
        ] {
            Cli::try_parse_from(&argv).unwrap_or_else(|e| panic!("{argv:?}: {e}"));
        }
    }

    #[test]
    fn linearize_tags_requires_a_column() {
        let err = Cli::try_parse_from([
            "punctkit", "task", "linearize", "--kind", "tags", "--in", "t", "--out", "o",
        ])
        .unwrap_err();
        assert_eq!(err.kind(), clap::error::ErrorKind::MissingRequiredArgument);
        Cli::try_parse_from([
            "punctkit", "task", "linearize", "--kind", "tags", "--column", "pos",
            "--in", "t", "--out", "o",
        ])
        .unwrap();
    }

    #[test]
    fn unknown_flags_are_usage_errors() {
        let err = Cli::try_parse_from(["punctkit", "corpus", "build", "--bogus"]).unwrap_err();
        assert!(err.use_stderr());
    }

    #[test]
    fn version_line_names_the_artifact_formats() {
        let line = long_version();
        assert!(line.contains("model format"));
        assert!(line.contains(baseline::FORMAT_VERSION));
    }

    #[test]
    fn error_chains_flatten_to_one_line() {
        let inner = anyhow::anyhow!("file\nnot found");
        let err = inner.context("read pairs");
        let line = single_line(&err);
        assert_eq!(line, "read pairs: file not found");
        assert!(!line.contains('\n'));
    }

    #[test]
    fn duplicate_prediction_ids_are_rejected() {
        let preds = vec![
            Prediction {
                id: "a".into(),
                output: "x".into(),
            },
            Prediction {
                id: "a".into(),
                output: "y".into(),
            },
        ];
        assert!(prediction_map(preds).is_err());
    }

    #[test]
    fn source_sniffing_handles_both_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let jsonl = dir.path().join("pairs.jsonl");
        fs::write(
            &jsonl,
            "{\"id\":\"p1\",\"source\":\"a b\",\"target\":\"A b.\"}\n",
        )
        .unwrap();
        assert_eq!(
            read_sources(&jsonl).unwrap(),
            vec![("p1".to_string(), "a b".to_string())]
        );

        let text = dir.path().join("plain.txt");
        fs::write(&text, "a b\n\nc d\n").unwrap();
        assert_eq!(
            read_sources(&text).unwrap(),
            vec![
                ("0".to_string(), "a b".to_string()),
                ("2".to_string(), "c d".to_string()),
            ]
        );
    }
}
