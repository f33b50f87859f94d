//! End-to-end tests of the `punctkit` binary: exit codes, file effects, and
//! byte-level determinism of the full pipeline.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn punctkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_punctkit"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        stderr(out)
    );
}

/// A deterministic document set with enough sentence structure for the
/// baseline to latch onto.
fn write_docs(path: &Path, docs: usize) {
    let subjects = ["the cat", "a dog", "the bird", "my friend", "the team"];
    let verbs = ["sat quietly", "ran home", "sang a song", "read the book", "won the game"];
    let mut body = String::new();
    for d in 0..docs {
        let mut text = String::new();
        for s in 0..8 {
            let subj = subjects[(d + s) % subjects.len()];
            let verb = verbs[(d * 3 + s) % verbs.len()];
            let mut sentence = format!("{subj} {verb}");
            sentence[..1].make_ascii_uppercase();
            text.push_str(&sentence);
            text.push_str(". ");
        }
        body.push_str(&format!(
            "{{\"id\":\"doc{d}\",\"text\":{}}}\n",
            serde_json::to_string(text.trim_end()).unwrap()
        ));
    }
    fs::write(path, body).unwrap();
}

/// corpus build → labels derive → train → restore → score, returning the
/// bytes of every artifact the run produced.
fn run_pipeline(dir: &Path) -> Vec<(String, Vec<u8>)> {
    write_docs(&dir.join("docs.jsonl"), 12);
    assert_ok(&punctkit(
        dir,
        &[
            "corpus", "build", "--input", "docs.jsonl", "--out", "pairs.jsonl",
            "--limit", "30", "--dev", "4", "--test", "4", "--seed", "11",
        ],
    ));
    assert_ok(&punctkit(
        dir,
        &["labels", "derive", "--pairs", "pairs.test.jsonl", "--out", "gold.jsonl"],
    ));
    assert_ok(&punctkit(
        dir,
        &[
            "baseline", "train", "--pairs", "pairs.train.jsonl", "--epochs", "4",
            "--seed", "42", "--out", "model.pk",
        ],
    ));
    assert_ok(&punctkit(
        dir,
        &[
            "baseline", "restore", "--model", "model.pk", "--source",
            "pairs.test.jsonl", "--out", "hyp.jsonl",
        ],
    ));
    assert_ok(&punctkit(
        dir,
        &[
            "score", "restoration", "--gold", "gold.jsonl", "--hyp", "hyp.jsonl",
            "--report", "report.json",
        ],
    ));
    let mut artifacts = Vec::new();
    for name in [
        "pairs.jsonl", "pairs.train.jsonl", "pairs.dev.jsonl", "pairs.test.jsonl",
        "gold.jsonl", "model.pk", "hyp.jsonl", "report.json",
    ] {
        artifacts.push((name.to_string(), fs::read(dir.join(name)).unwrap()));
    }
    artifacts
}

#[test]
fn version_names_the_artifact_formats() {
    let dir = tempfile::tempdir().unwrap();
    let out = punctkit(dir.path(), &["--version"]);
    assert_eq!(out.status.code(), Some(0));
    let line = stdout(&out);
    assert!(line.contains("model format"), "got {line:?}");
    assert!(line.contains("feature template"), "got {line:?}");
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["corpus", "build", "--bogus"],
        vec!["score", "task", "--kind", "nonsense", "--gold", "g", "--pred", "p", "--report", "r"],
        vec!["task", "linearize", "--kind", "tags", "--in", "a", "--out", "b"],
        vec!["frobnicate"],
    ] {
        let out = punctkit(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}: {}", stderr(&out));
    }
    let help = punctkit(dir.path(), &["--help"]);
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn missing_input_exits_1_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = punctkit(
        dir.path(),
        &["labels", "derive", "--pairs", "absent.jsonl", "--out", "labels.jsonl"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error: "), "stderr: {}", stderr(&out));
    assert!(!dir.path().join("labels.jsonl").exists());
}

#[test]
fn malformed_input_leaves_no_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.jsonl"), "{\"id\":\"a\",\"source\":\"x\",\"target\":\"X\"}\nnot json\n").unwrap();
    let out = punctkit(
        dir.path(),
        &["labels", "derive", "--pairs", "bad.jsonl", "--out", "labels.jsonl"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("labels.jsonl").exists());
}

#[test]
fn pipeline_is_byte_deterministic_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run_pipeline(a.path());
    let second = run_pipeline(b.path());
    for ((name, bytes_a), (_, bytes_b)) in first.iter().zip(second.iter()) {
        assert_eq!(bytes_a, bytes_b, "{name} differs between identical runs");
    }
}

#[test]
fn scoring_targets_against_themselves_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    write_docs(&dir.path().join("docs.jsonl"), 6);
    assert_ok(&punctkit(
        dir.path(),
        &[
            "corpus", "build", "--input", "docs.jsonl", "--out", "pairs.jsonl",
            "--limit", "25", "--dev", "2", "--test", "2", "--seed", "3",
        ],
    ));
    assert_ok(&punctkit(
        dir.path(),
        &["labels", "derive", "--pairs", "pairs.jsonl", "--out", "gold.jsonl"],
    ));
    // Echo each pair's target back as its hypothesis.
    let pairs = fs::read_to_string(dir.path().join("pairs.jsonl")).unwrap();
    let mut hyp = String::new();
    for line in pairs.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        hyp.push_str(&format!(
            "{{\"id\":{},\"restored\":{}}}\n",
            v["id"], v["target"]
        ));
    }
    fs::write(dir.path().join("hyp.jsonl"), hyp).unwrap();
    let out = punctkit(
        dir.path(),
        &[
            "score", "restoration", "--gold", "gold.jsonl", "--hyp", "hyp.jsonl",
            "--report", "report.json",
        ],
    );
    assert_ok(&out);
    let table = stdout(&out);
    let total = table
        .lines()
        .find(|l| l.starts_with("TOTAL"))
        .expect("TOTAL row");
    let fields: Vec<&str> = total.split('\t').collect();
    assert_eq!(&fields[4..7], &["1.00", "1.00", "1.00"], "table: {table}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["score"]["f1"], 1.0);
}

#[test]
fn task_chain_round_trips_conll_structures() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("dev.conll"),
        "-DOCSTART- -X- -X- O\n\n\
         Faker NNP B-NP B-PER\nis VBZ B-VP O\nstrong JJ B-ADJP O\n. . O O\n\n\
         T1 NNP B-NP B-ORG\nwon VBD B-VP O\n",
    )
    .unwrap();
    assert_ok(&punctkit(
        dir.path(),
        &["task", "ingest", "--format", "conll03", "--in", "dev.conll", "--out", "tasks.jsonl"],
    ));
    assert_ok(&punctkit(
        dir.path(),
        &["task", "linearize", "--kind", "ner", "--in", "tasks.jsonl", "--out", "lin.jsonl"],
    ));
    // Feed the gold targets back as predictions.
    let lin = fs::read_to_string(dir.path().join("lin.jsonl")).unwrap();
    let mut pred = String::new();
    for line in lin.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        pred.push_str(&format!("{{\"id\":{},\"output\":{}}}\n", v["id"], v["target"]));
    }
    fs::write(dir.path().join("pred.jsonl"), pred).unwrap();
    assert_ok(&punctkit(
        dir.path(),
        &[
            "task", "delinearize", "--kind", "ner", "--in", "pred.jsonl",
            "--out", "parsed.jsonl",
        ],
    ));
    let out = punctkit(
        dir.path(),
        &[
            "score", "task", "--kind", "spans", "--gold", "tasks.jsonl",
            "--pred", "pred.jsonl", "--report", "rep.json",
        ],
    );
    assert_ok(&out);
    assert!(stdout(&out).contains("1.00\t1.00\t1.00"), "got {}", stdout(&out));
}

#[test]
fn restore_accepts_plain_text_sources() {
    let dir = tempfile::tempdir().unwrap();
    write_docs(&dir.path().join("docs.jsonl"), 6);
    assert_ok(&punctkit(
        dir.path(),
        &[
            "corpus", "build", "--input", "docs.jsonl", "--out", "pairs.jsonl",
            "--limit", "25", "--dev", "2", "--test", "2", "--seed", "3",
        ],
    ));
    assert_ok(&punctkit(
        dir.path(),
        &[
            "baseline", "train", "--pairs", "pairs.train.jsonl", "--epochs", "2",
            "--seed", "42", "--out", "model.pk",
        ],
    ));
    fs::write(dir.path().join("plain.txt"), "the cat sat quietly\nmy friend won the game\n").unwrap();
    assert_ok(&punctkit(
        dir.path(),
        &[
            "baseline", "restore", "--model", "model.pk", "--source", "plain.txt",
            "--out", "hyp.jsonl",
        ],
    ));
    let hyp = fs::read_to_string(dir.path().join("hyp.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = hyp
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["id"], "0");
    assert!(lines[1]["restored"].as_str().unwrap().to_lowercase().contains("my friend"));
}

#[test]
fn corpus_build_seed_changes_the_partition() {
    let dir = tempfile::tempdir().unwrap();
    write_docs(&dir.path().join("docs.jsonl"), 12);
    let build = |seed: &str, out: &str| {
        assert_ok(&punctkit(
            dir.path(),
            &[
                "corpus", "build", "--input", "docs.jsonl", "--out", out,
                "--limit", "30", "--dev", "4", "--test", "4", "--seed", seed,
            ],
        ));
    };
    build("1", "a.jsonl");
    build("2", "b.jsonl");
    let read = |p: &str| fs::read_to_string(dir.path().join(p)).unwrap();
    // The unpartitioned pairs are seed-independent; the splits move.
    assert_eq!(read("a.jsonl"), read("b.jsonl"));
    assert_ne!(read("a.test.jsonl"), read("b.test.jsonl"));
}

#[test]
fn split_files_partition_the_pairs_exactly() {
    let dir = tempfile::tempdir().unwrap();
    write_docs(&dir.path().join("docs.jsonl"), 12);
    assert_ok(&punctkit(
        dir.path(),
        &[
            "corpus", "build", "--input", "docs.jsonl", "--out", "pairs.jsonl",
            "--limit", "30", "--dev", "4", "--test", "4", "--seed", "11",
        ],
    ));
    let ids = |p: PathBuf| -> Vec<String> {
        fs::read_to_string(p)
            .unwrap()
            .lines()
            .map(|l| {
                let v: serde_json::Value = serde_json::from_str(l).unwrap();
                v["id"].as_str().unwrap().to_string()
            })
            .collect()
    };
    let all = ids(dir.path().join("pairs.jsonl"));
    let mut recombined = ids(dir.path().join("pairs.train.jsonl"));
    let dev = ids(dir.path().join("pairs.dev.jsonl"));
    let test = ids(dir.path().join("pairs.test.jsonl"));
    assert_eq!(dev.len(), 4);
    assert_eq!(test.len(), 4);
    recombined.extend(dev);
    recombined.extend(test);
    let mut all_sorted = all.clone();
    all_sorted.sort();
    recombined.sort();
    assert_eq!(all_sorted, recombined);
}
