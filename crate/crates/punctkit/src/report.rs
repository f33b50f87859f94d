//! Evaluation reports: full-precision rows for JSON output and two-decimal
//! tables for humans.
//!
//! A report is deliberately timestamp-free — the same scores under the same
//! config must serialize byte-identically — and instead carries the tool
//! version plus a content hash of the resolved run configuration, so any two
//! reports can be checked for provenance by diffing two strings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::scorer::TallyScore;

/// One evaluation: which task, trained on what, evaluated on what, and how it
/// went. `diagnostics` carries counter-style side channels (parse failures,
/// BIO repairs, missing hypotheses, …) that the table omits but the JSON
/// report keeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub task: String,
    pub training_set: String,
    pub evaluation_set: String,
    /// Evaluation drawn from the same source as the training set.
    #[serde(default)]
    pub in_distribution: bool,
    #[serde(flatten)]
    pub score: TallyScore,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub diagnostics: BTreeMap<String, u64>,
}

/// A full report: tool version, config hash, and rows in their canonical
/// (task, training set, evaluation set) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    pub config_hash: String,
    pub rows: Vec<ReportRow>,
}

impl Report {
    /// Assembles a report, sorting the rows into canonical order.
    pub fn new(config_hash: impl Into<String>, mut rows: Vec<ReportRow>) -> Report {
        rows.sort_by(|a, b| {
            (&a.task, &a.training_set, &a.evaluation_set)
                .cmp(&(&b.task, &b.training_set, &b.evaluation_set))
        });
        Report {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash.into(),
            rows,
        }
    }
}

/// Table flavors for [`render_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportStyle {
    /// One tab-separated row per evaluation; fully machine-splittable.
    Tsv,
    /// A pipe table; consecutive rows of one task share a single task cell.
    Markdown,
}

/// SHA-256 hex digest of a config's canonical JSON form. Field order follows
/// the struct declaration, so equal configs hash equally across runs.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Two-decimal table form with the leading zero dropped: 0.666… renders as
/// ".67" and exact one as "1.00".
pub fn format_metric(value: f64) -> String {
    let s = format!("{value:.2}");
    match s.strip_prefix("0.") {
        Some(rest) => format!(".{rest}"),
        None => s,
    }
}

const HEADERS: [&str; 6] = ["Task", "Training set", "Evaluation set", "P", "R", "F1"];

/// Renders the rows as a text table. Metrics print to two decimals; the
/// evaluation-set cell gains an `(ID)` marker for in-distribution rows; an
/// empty report renders as a bare header.
pub fn render_report(report: &Report, style: ReportStyle) -> String {
    let cells: Vec<[String; 6]> = report
        .rows
        .iter()
        .map(|row| {
            let eval = if row.in_distribution {
                format!("{} (ID)", row.evaluation_set)
            } else {
                row.evaluation_set.clone()
            };
            [
                row.task.clone(),
                row.training_set.clone(),
                eval,
                format_metric(row.score.precision),
                format_metric(row.score.recall),
                format_metric(row.score.f1),
            ]
        })
        .collect();
    match style {
        ReportStyle::Tsv => {
            let mut out = HEADERS.join("\t");
            out.push('\n');
            for row in &cells {
                out.push_str(&row.join("\t"));
                out.push('\n');
            }
            out
        }
        ReportStyle::Markdown => {
            let mut out = format!("| {} |\n", HEADERS.join(" | "));
            out.push_str("| --- | --- | --- | --- | --- | --- |\n");
            let mut last_task: Option<&str> = None;
            for row in &cells {
                let task_cell = if last_task == Some(row[0].as_str()) {
                    ""
                } else {
                    row[0].as_str()
                };
                last_task = Some(row[0].as_str());
                out.push_str(&format!(
                    "| {} | {} | {} | {} | {} | {} |\n",
                    task_cell, row[1], row[2], row[3], row[4], row[5]
                ));
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(task: &str, train: &str, eval: &str, f1: f64) -> ReportRow {
        ReportRow {
            task: task.to_string(),
            training_set: train.to_string(),
            evaluation_set: eval.to_string(),
            in_distribution: false,
            score: TallyScore {
                tp: 2,
                fp: 1,
                fn_: 1,
                precision: 2.0 / 3.0,
                recall: 0.5,
                f1,
            },
            diagnostics: BTreeMap::new(),
        }
    }

    #[test]
    fn metric_formatting_drops_the_leading_zero() {
        assert_eq!(format_metric(0.666666), ".67");
        assert_eq!(format_metric(1.0), "1.00");
        assert_eq!(format_metric(0.0), ".00");
        assert_eq!(format_metric(0.5), ".50");
        assert_eq!(format_metric(0.955001), ".96");
    }

    #[test]
    fn config_hash_is_stable_and_content_sensitive() {
        #[derive(Serialize)]
        struct Cfg {
            seed: u64,
            epochs: u32,
        }
        let a = config_hash(&Cfg { seed: 42, epochs: 10 });
        let b = config_hash(&Cfg { seed: 42, epochs: 10 });
        let c = config_hash(&Cfg { seed: 43, epochs: 10 });
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
        assert!(a.chars().all(|ch| ch.is_ascii_hexdigit()));
    }

    #[test]
    fn rows_sort_into_canonical_order() {
        let report = Report::new(
            "h",
            vec![
                row("ner", "b", "x", 0.5),
                row("chunking", "a", "y", 0.5),
                row("ner", "a", "z", 0.5),
            ],
        );
        let order: Vec<(&str, &str)> = report
            .rows
            .iter()
            .map(|r| (r.task.as_str(), r.training_set.as_str()))
            .collect();
        assert_eq!(order, vec![("chunking", "a"), ("ner", "a"), ("ner", "b")]);
    }

    #[test]
    fn tsv_renders_one_line_per_row() {
        let report = Report::new("h", vec![row("ner", "conll03", "wnut17", 0.666666)]);
        let text = render_report(&report, ReportStyle::Tsv);
        assert_eq!(
            text,
            "Task\tTraining set\tEvaluation set\tP\tR\tF1\n\
             ner\tconll03\twnut17\t.67\t.50\t.67\n"
        );
    }

    #[test]
    fn markdown_groups_consecutive_rows_of_one_task() {
        let report = Report::new(
            "h",
            vec![
                row("ner", "conll03", "a", 1.0),
                row("ner", "conll03", "b", 1.0),
                row("pos", "ptb", "c", 1.0),
            ],
        );
        let text = render_report(&report, ReportStyle::Markdown);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[2].starts_with("| ner |"));
        assert!(lines[3].starts_with("|  |"));
        assert!(lines[4].starts_with("| pos |"));
    }

    #[test]
    fn in_distribution_rows_are_marked() {
        let mut marked = row("ner", "conll03", "conll03", 1.0);
        marked.in_distribution = true;
        let report = Report::new("h", vec![marked]);
        let text = render_report(&report, ReportStyle::Tsv);
        assert!(text.contains("conll03 (ID)"));
    }

    #[test]
    fn empty_report_renders_header_only() {
        let report = Report::new("h", Vec::new());
        assert_eq!(render_report(&report, ReportStyle::Tsv).lines().count(), 1);
        assert_eq!(
            render_report(&report, ReportStyle::Markdown).lines().count(),
            2
        );
    }

    #[test]
    fn json_report_keeps_full_precision_and_diagnostics() {
        let mut r = row("re", "tacred", "tacred", 0.6666666666666666);
        r.diagnostics.insert("malformed_groups".to_string(), 3);
        let report = Report::new("deadbeef", vec![r]);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("0.6666666666666666"));
        assert!(json.contains(r#""malformed_groups":3"#));
        let back: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    proptest! {
        #[test]
        fn formatted_metrics_parse_back_within_rounding(v in 0.0f64..=1.0) {
            let s = format_metric(v);
            let parsed: f64 = s.parse().unwrap();
            prop_assert!((parsed - v).abs() <= 0.005 + 1e-9);
        }
    }
}
