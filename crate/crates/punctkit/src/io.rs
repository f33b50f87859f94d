//! File plumbing: JSON-lines readers/writers and atomic file replacement.
//!
//! Writes go through a temp file in the destination directory followed by a
//! rename, so a crash or a failed run never leaves a half-written artifact at
//! the destination path.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Writes `contents` to `path` atomically (temp file + rename).
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Reads a JSON-lines file into records, skipping blank lines. Parse errors
/// carry the 1-based line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("open {}", path.display()))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.with_context(|| format!("read {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line)
            .map_err(|e| anyhow!("{}:{}: {e}", path.display(), lineno + 1))?;
        out.push(record);
    }
    Ok(out)
}

/// Serializes records one per line and writes the file atomically.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut buf = String::new();
    for item in items {
        buf.push_str(&serde_json::to_string(item)?);
        buf.push('\n');
    }
    write_atomic(path, &buf).with_context(|| format!("write {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Pair;

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.jsonl");
        let pairs = vec![
            Pair { id: "a-0".into(), source: "hi".into(), target: "Hi.".into() },
            Pair { id: "b-0".into(), source: "yo".into(), target: "Yo,".into() },
        ];
        write_jsonl(&path, &pairs).unwrap();
        let back: Vec<Pair> = read_jsonl(&path).unwrap();
        assert_eq!(back, pairs);
    }

    #[test]
    fn read_skips_blank_lines_and_reports_bad_ones() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.jsonl");
        std::fs::write(&path, "\n{\"id\":\"a\",\"source\":\"s\",\"target\":\"t\"}\n\n").unwrap();
        let ok: Vec<Pair> = read_jsonl(&path).unwrap();
        assert_eq!(ok.len(), 1);

        std::fs::write(&path, "{\"id\":\"a\",\"source\":\"s\",\"target\":\"t\"}\nnot json\n").unwrap();
        let err = read_jsonl::<Pair>(&path).unwrap_err();
        assert!(err.to_string().contains(":2"), "error should cite line 2: {err}");
    }

    #[test]
    fn write_atomic_replaces_existing_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, "one").unwrap();
        write_atomic(&path, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
    }

    #[test]
    fn read_missing_file_is_an_error() {
        let err = read_jsonl::<Pair>(Path::new("/nonexistent/nope.jsonl")).unwrap_err();
        assert!(err.to_string().contains("nope.jsonl"));
    }
}
