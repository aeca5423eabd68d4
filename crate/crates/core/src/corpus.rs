//! The SRP-3 model corpus and the analysis results it must reproduce.
//!
//! Model files and the manifest live in `models/` at the repository root and
//! are embedded here, so tests and the CLI share one copy.  Checks can also
//! run against edited copies of the files.

use std::fmt;
use std::time::{Duration, Instant};

use serde::Deserialize;
use thiserror::Error;

use crate::model_lang::{parse, validate_file};
use crate::par::Parallelism;
use crate::strand::{load, search, Bounds, Outcome, Shape, Status};
use crate::term::{Sort, Term};

pub const MANIFEST: &str = include_str!("../../../models/manifest.toml");

/// Every model file, by name relative to `models/`.
pub const FILES: &[(&str, &str)] = &[
    ("srp3.lisp", include_str!("../../../models/srp3.lisp")),
    ("srp3-listener-x.lisp", include_str!("../../../models/srp3-listener-x.lisp")),
    ("srp3-listener-v.lisp", include_str!("../../../models/srp3-listener-v.lisp")),
    ("srp3-leak.lisp", include_str!("../../../models/srp3-leak.lisp")),
    ("srp3-malserver.lisp", include_str!("../../../models/srp3-malserver.lisp")),
];

pub fn source(file: &str) -> Option<&'static str> {
    FILES.iter().find(|(n, _)| *n == file).map(|(_, t)| *t)
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("manifest: {0}")]
    Manifest(#[from] toml::de::Error),
    #[error("manifest: duplicate entry id {0}")]
    DuplicateId(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Witness {
    ClientlessServer,
    ClientlessServerBEqU,
    MalserverWithoutClient,
}

impl Witness {
    pub fn as_str(self) -> &'static str {
        match self {
            Witness::ClientlessServer => "clientless-server",
            Witness::ClientlessServerBEqU => "clientless-server-b-eq-u",
            Witness::MalserverWithoutClient => "malserver-without-client",
        }
    }

    /// Whether the shape exhibits the witness.
    pub fn holds(self, shape: &Shape) -> bool {
        let no_client = shape.strands_of("client").is_empty();
        let full_servers = full_height(shape, "server");
        match self {
            Witness::ClientlessServer => no_client && !full_servers.is_empty(),
            Witness::ClientlessServerBEqU => {
                no_client
                    && full_servers.iter().any(|&i| {
                        let s = &shape.skeleton.strands[i];
                        let b = s.role.var("b").and_then(|v| s.inst.get(v));
                        let u = s.role.var("u").and_then(|v| s.inst.get(v));
                        b.is_some() && b == u
                    })
            }
            Witness::MalserverWithoutClient => {
                no_client
                    && !full_servers.is_empty()
                    && !shape.strands_of("malserver").is_empty()
                    && !shape.strands_of("client-init").is_empty()
                    && !shape.strands_of("server-init").is_empty()
            }
        }
    }
}

fn full_height(shape: &Shape, role: &str) -> Vec<usize> {
    shape
        .strands_of(role)
        .into_iter()
        .filter(|&i| {
            let s = &shape.skeleton.strands[i];
            s.height == s.role.len()
        })
        .collect()
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    /// The file parses and validates with no diagnostics.
    #[serde(default)]
    pub valid: bool,
    pub shapes: Option<usize>,
    pub status: Option<Status>,
    /// Witnesses some shape must exhibit.
    #[serde(default)]
    pub present: Vec<Witness>,
    /// Witnesses no shape may exhibit.
    #[serde(default)]
    pub absent: Vec<Witness>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    pub id: String,
    pub file: String,
    pub pov: Option<String>,
    pub expect: Expectation,
}

#[derive(Deserialize)]
struct ManifestFile {
    entry: Vec<CorpusEntry>,
}

pub fn parse_manifest(text: &str) -> Result<Vec<CorpusEntry>, CorpusError> {
    let m: ManifestFile = toml::from_str(text)?;
    for (i, e) in m.entry.iter().enumerate() {
        if m.entry[..i].iter().any(|f| f.id == e.id) {
            return Err(CorpusError::DuplicateId(e.id.clone()));
        }
    }
    Ok(m.entry)
}

/// The embedded corpus entries in manifest order.
pub fn corpus() -> Vec<CorpusEntry> {
    parse_manifest(MANIFEST).expect("embedded manifest is well formed")
}

#[derive(Debug, Clone)]
pub struct EntryReport {
    pub id: String,
    pub failures: Vec<String>,
    pub outcome: Option<Outcome>,
    pub elapsed: Duration,
}

impl EntryReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for EntryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "pass" } else { "FAIL" };
        write!(f, "{verdict} {}", self.id)?;
        if let Some(o) = &self.outcome {
            write!(f, ": {} shapes, {}", o.shapes.len(), o.status)?;
        }
        for m in &self.failures {
            write!(f, "\n    {m}")?;
        }
        Ok(())
    }
}

/// Checks `entry` against `text`, the contents of its model file.
pub fn check_entry(entry: &CorpusEntry, text: &str, bounds: &Bounds, mode: Parallelism) -> EntryReport {
    let start = Instant::now();
    let mut report = EntryReport {
        id: entry.id.clone(),
        failures: Vec::new(),
        outcome: None,
        elapsed: Duration::ZERO,
    };
    let file = match parse(text) {
        Ok(f) => f,
        Err(e) => {
            report.failures.push(format!("{}: {e}", entry.file));
            return report;
        }
    };
    if entry.expect.valid {
        for d in validate_file(&file) {
            report.failures.push(format!("{}: {d}", entry.file));
        }
    }
    if let Some(name) = &entry.pov {
        match load(&file) {
            Err(ds) => report.failures.extend(ds.iter().map(|d| format!("{}: {d}", entry.file))),
            Ok(povs) => match povs.iter().find(|p| &p.name == name) {
                None => report.failures.push(format!("{}: no point of view named {name}", entry.file)),
                Some(pov) => {
                    let out = search(&pov.skeleton, bounds, mode);
                    report.failures.extend(compare(&entry.expect, &out));
                    report.outcome = Some(out);
                }
            },
        }
    }
    report.elapsed = start.elapsed();
    report
}

fn compare(expect: &Expectation, out: &Outcome) -> Vec<String> {
    let mut failures = Vec::new();
    if let Some(n) = expect.shapes {
        if out.shapes.len() != n {
            failures.push(format!("expected {n} shapes, found {}", out.shapes.len()));
        }
    }
    if let Some(s) = expect.status {
        if out.status != s {
            failures.push(format!("expected status {s}, found {}", out.status));
        }
    }
    for w in &expect.present {
        if !out.shapes.iter().any(|s| w.holds(s)) {
            failures.push(format!("no shape exhibits {w}"));
        }
    }
    for w in &expect.absent {
        if let Some(i) = out.shapes.iter().position(|s| w.holds(s)) {
            failures.push(format!("shape {i} exhibits {w}"));
        }
    }
    failures
}

/// Checks every embedded entry.
pub fn regress(bounds: &Bounds, mode: Parallelism) -> Vec<EntryReport> {
    corpus()
        .iter()
        .map(|e| check_entry(e, source(&e.file).unwrap_or(""), bounds, mode))
        .collect()
}

fn rndx(name: &str) -> Term {
    Term::atom(name, Sort::Rndx)
}

fn exp(base: Term, power: Term) -> Term {
    Term::exp(base, power).expect("exponent arguments are well sorted")
}

fn mul(factors: Vec<Term>) -> Term {
    Term::mul(factors).expect("exponent arguments are well sorted")
}

/// The session key as the client derives it: from `g^b`, raised to `a` and
/// to `u x`.
pub fn key_term_client_with(a: &Term, b: &Term, u: &Term, x: &Term) -> Term {
    let gb = exp(Term::Gen, b.clone());
    Term::hash(vec![
        exp(gb.clone(), a.clone()),
        exp(gb, mul(vec![u.clone(), x.clone()])),
    ])
}

/// The session key as the server derives it: `g^a` raised to `b`, and the
/// verifier `g^x` raised to `u b`.
pub fn key_term_server_with(a: &Term, b: &Term, u: &Term, x: &Term) -> Term {
    Term::hash(vec![
        exp(exp(Term::Gen, a.clone()), b.clone()),
        exp(exp(Term::Gen, x.clone()), mul(vec![u.clone(), b.clone()])),
    ])
}

pub fn key_term_client() -> Term {
    key_term_client_with(&rndx("a"), &rndx("b"), &rndx("u"), &rndx("x"))
}

pub fn key_term_server() -> Term {
    key_term_server_with(&rndx("a"), &rndx("b"), &rndx("u"), &rndx("x"))
}
