//! Consistency of `docs/mapping.md` with the corpus manifest and the model
//! files.

use std::path::Path;

use crate::corpus::{parse_manifest, CorpusEntry};

pub const MAPPING: &str = include_str!("../../../docs/mapping.md");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingRow {
    pub id: String,
    pub anchor: String,
    pub file: String,
    pub expectation: String,
    pub notes: String,
}

fn cells(line: &str) -> Option<Vec<String>> {
    let t = line.trim();
    let inner = t.strip_prefix('|')?.strip_suffix('|')?;
    Some(inner.split('|').map(|c| c.trim().to_string()).collect())
}

/// Rows of the first table whose header starts with `id`.
pub fn parse_rows(doc: &str) -> Result<Vec<MappingRow>, String> {
    let mut lines = doc.lines();
    loop {
        match lines.next() {
            None => return Err("no mapping table".into()),
            Some(l) if cells(l).is_some_and(|c| c.first().map(String::as_str) == Some("id")) => break,
            Some(_) => {}
        }
    }
    match lines.next().and_then(cells) {
        Some(sep) if sep.iter().all(|c| !c.is_empty() && c.chars().all(|ch| ch == '-' || ch == ':')) => {}
        _ => return Err("mapping table lacks a separator row".into()),
    }
    let mut rows = Vec::new();
    for l in lines {
        let Some(c) = cells(l) else { break };
        let [id, anchor, file, expectation, notes] = <[String; 5]>::try_from(c)
            .map_err(|c| format!("row with {} cells: {l}", c.len()))?;
        rows.push(MappingRow {
            id,
            anchor,
            file,
            expectation,
            notes,
        });
    }
    Ok(rows)
}

/// Every problem found: entries without exactly one row, rows for unknown
/// entries, rows without an anchor, and files that are missing or differ
/// from the manifest.  `file_exists` answers for names under `models/`.
pub fn problems(entries: &[CorpusEntry], doc: &str, file_exists: impl Fn(&str) -> bool) -> Vec<String> {
    let rows = match parse_rows(doc) {
        Ok(r) => r,
        Err(e) => return vec![e],
    };
    let mut out = Vec::new();
    for e in entries {
        match rows.iter().filter(|r| r.id == e.id).count() {
            0 => out.push(format!("entry {} has no mapping row", e.id)),
            1 => {}
            n => out.push(format!("entry {} has {n} mapping rows", e.id)),
        }
    }
    for r in &rows {
        match entries.iter().find(|e| e.id == r.id) {
            None => out.push(format!("row {} names no corpus entry", r.id)),
            Some(e) if e.file != r.file => out.push(format!("row {} cites {} but the manifest has {}", r.id, r.file, e.file)),
            Some(_) => {}
        }
        if !file_exists(&r.file) {
            out.push(format!("row {} cites missing file {}", r.id, r.file));
        }
        if r.anchor.is_empty() {
            out.push(format!("row {} has no anchor", r.id));
        }
    }
    out
}

/// Checks a checkout: `root/models/manifest.toml`, `root/docs/mapping.md`
/// and the files under `root/models`.
pub fn check_repo(root: &Path) -> Result<(), Vec<String>> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| vec![format!("{}: {e}", p.display())]);
    let manifest = read(&root.join("models/manifest.toml"))?;
    let doc = read(&root.join("docs/mapping.md"))?;
    let entries = parse_manifest(&manifest).map_err(|e| vec![e.to_string()])?;
    let models = root.join("models");
    let mut out = problems(&entries, &doc, |f| models.join(f).is_file());
    for e in &entries {
        if !models.join(&e.file).is_file() {
            out.push(format!("entry {} names missing file {}", e.id, e.file));
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}
