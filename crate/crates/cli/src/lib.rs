//! Front end for the `qdecide` solver: runs single formulas and labeled
//! corpora and renders the results as text or JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use num_bigint::BigInt;
use num_traits::{One, Signed};
use qdecide::formula::parse;
use qdecide::interval::Rational;
use qdecide::solver::{quasi_decide, Certificate, DriverConfig, Outcome, SolveError, Verdict};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const EXIT_DECIDED: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub budget: u32,
    pub epsilon: Rational,
    pub format: Format,
    pub certificate: bool,
    pub trace: bool,
    pub workers: Option<usize>,
    pub time_limit: Option<Duration>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            budget: 20,
            epsilon: Rational::one(),
            format: Format::Text,
            certificate: false,
            trace: false,
            workers: None,
            time_limit: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("epsilon must be a positive rational, got `{0}`")]
    BadEpsilon(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Solve(#[from] SolveError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}: missing sidecar")]
    MissingSidecar(PathBuf),
    #[error("{path}: malformed sidecar `{line}`")]
    BadSidecar { path: PathBuf, line: String },
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.budget == 0 {
            return Err(CliError::ZeroBudget);
        }
        if !self.epsilon.is_positive() {
            return Err(CliError::BadEpsilon(format_rational(&self.epsilon)));
        }
        Ok(())
    }

    fn driver(&self) -> DriverConfig {
        DriverConfig {
            budget: self.budget,
            initial_epsilon: self.epsilon.clone(),
            parallel: self.workers.is_none_or(|w| w > 1),
            iteration_time_limit: self.time_limit,
            ..DriverConfig::default()
        }
    }
}

/// Writes `q` as `num/den` with a positive denominator.
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Accepts `n`, `n/d` and finite decimals such as `0.125`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let n = BigInt::from_str(&digits).ok()?;
        let d = BigInt::from(10u32).pow(frac.len() as u32);
        let q = Rational::new(n, d);
        return Some(if neg { -q } else { q });
    }
    let q = Rational::from_str(s).ok()?;
    Some(q)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub kind: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: u32,
    pub epsilon: String,
    pub value: String,
    pub cells: u64,
    pub faces: u64,
    pub complexes: u64,
    pub degrees: BTreeMap<String, u64>,
    pub degree_failures: u64,
    pub grids_skipped: u64,
    pub timed_out: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub outcome: String,
    pub iterations: u32,
    pub final_epsilon: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<CertificateReport>,
    pub trace: Vec<IterationReport>,
}

impl Report {
    pub fn from_verdict(v: &Verdict, certificate: bool) -> Self {
        Self {
            outcome: v.outcome.to_string(),
            iterations: v.iterations,
            final_epsilon: format_rational(&v.final_epsilon),
            certificate: v.certificate.as_ref().filter(|_| certificate).map(|c| CertificateReport {
                kind: match c {
                    Certificate::Margin(_) => "margin".into(),
                    Certificate::Separation(_) => "separation".into(),
                },
                value: format_rational(c.value()),
            }),
            trace: v
                .trace
                .iter()
                .map(|t| IterationReport {
                    iteration: t.iteration,
                    epsilon: format_rational(&t.epsilon),
                    value: t.value.to_string(),
                    cells: t.stats.cells,
                    faces: t.stats.faces,
                    complexes: t.stats.complexes,
                    degrees: t.stats.degrees.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
                    degree_failures: t.stats.degree_failures,
                    grids_skipped: t.stats.grids_skipped,
                    timed_out: t.stats.timed_out,
                })
                .collect(),
        }
    }

    pub fn render(&self, format: Format, detailed: bool) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(self).expect("report serializes"),
            Format::Text => self.render_text(detailed),
        }
    }

    fn render_text(&self, detailed: bool) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.outcome);
        let _ = writeln!(s, "iterations: {}", self.iterations);
        let _ = writeln!(s, "final epsilon: {}", self.final_epsilon);
        if let Some(c) = &self.certificate {
            let _ = writeln!(s, "{}: {}", c.kind, c.value);
        }
        let values: Vec<&str> = self.trace.iter().map(|t| t.value.as_str()).collect();
        let _ = writeln!(s, "trace: {}", values.join(" "));
        if detailed {
            for t in &self.trace {
                let degrees: Vec<String> = t.degrees.iter().map(|(d, n)| format!("{d}x{n}")).collect();
                let _ = writeln!(
                    s,
                    "  #{:<3} eps={:<10} {:<6} cells={} faces={} complexes={} degrees=[{}] failures={}{}{}",
                    t.iteration,
                    t.epsilon,
                    t.value,
                    t.cells,
                    t.faces,
                    t.complexes,
                    degrees.join(","),
                    t.degree_failures,
                    if t.grids_skipped > 0 { " grid-limit" } else { "" },
                    if t.timed_out { " timed-out" } else { "" },
                );
            }
        }
        s
    }
}

pub fn exit_code(outcome: Outcome) -> i32 {
    match outcome {
        Outcome::True | Outcome::False => EXIT_DECIDED,
        Outcome::Unknown => EXIT_UNKNOWN,
    }
}

/// Parses and solves `source`.
pub fn solve(config: &RunConfig, source: &str) -> Result<Verdict, CliError> {
    config.validate()?;
    let f = parse(source).map_err(|e| CliError::Parse(e.to_string()))?;
    let driver = config.driver();
    let go = || quasi_decide(&f, &driver);
    let verdict = match config.workers {
        Some(w) => qdecide::with_workers(w, go),
        None => go(),
    }?;
    Ok(verdict)
}

/// Output of a single run: rendered report and process exit code.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub exit: i32,
    pub report: Option<Report>,
    pub text: String,
}

pub fn run(config: &RunConfig, source: &str) -> RunOutput {
    match solve(config, source) {
        Ok(v) => {
            let report = Report::from_verdict(&v, config.certificate);
            RunOutput {
                exit: exit_code(v.outcome),
                text: report.render(config.format, config.trace),
                report: Some(report),
            }
        }
        Err(e) => RunOutput {
            exit: EXIT_ERROR,
            report: None,
            text: format!("error: {e}"),
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expectation {
    True,
    False,
    /// Stays undecided for every budget up to this one.
    Unknown(u32),
}

impl Expectation {
    pub fn parse(line: &str) -> Option<Self> {
        let rest = line.trim().strip_prefix("EXPECT")?.trim();
        match rest {
            "TRUE" => Some(Self::True),
            "FALSE" => Some(Self::False),
            _ => rest.strip_prefix("UNKNOWN@")?.parse().ok().filter(|&b| b > 0).map(Self::Unknown),
        }
    }

    /// Judges the outcome of a run at `budget`.
    pub fn judge(self, outcome: Outcome) -> Status {
        match (self, outcome) {
            (Self::True, Outcome::True) | (Self::False, Outcome::False) | (Self::Unknown(_), Outcome::Unknown) => {
                Status::Pass
            }
            (Self::True, Outcome::False) | (Self::False, Outcome::True) => Status::Violation,
            (Self::Unknown(_), _) => Status::Violation,
            (_, Outcome::Unknown) => Status::Mismatch,
        }
    }
}

impl std::fmt::Display for Expectation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::True => f.write_str("TRUE"),
            Self::False => f.write_str("FALSE"),
            Self::Unknown(b) => write!(f, "UNKNOWN@{b}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    /// A decided answer that contradicts the label.
    Violation,
    /// Undecided where the label promises a decision.
    Mismatch,
    Error,
}

#[derive(Clone, Debug)]
pub struct CorpusRow {
    pub file: PathBuf,
    pub expected: Expectation,
    pub got: Option<Outcome>,
    pub iterations: u32,
    pub status: Status,
    pub message: Option<String>,
}

#[derive(Clone, Debug, Default)]
pub struct CorpusSummary {
    pub rows: Vec<CorpusRow>,
}

impl CorpusSummary {
    pub fn exit(&self) -> i32 {
        let has = |s| self.rows.iter().any(|r| r.status == s);
        if has(Status::Violation) {
            EXIT_VIOLATION
        } else if has(Status::Error) {
            EXIT_ERROR
        } else if has(Status::Mismatch) {
            EXIT_MISMATCH
        } else {
            EXIT_DECIDED
        }
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            let name = r.file.file_name().map_or_else(|| r.file.display().to_string(), |n| n.to_string_lossy().into_owned());
            let got = r.got.map_or_else(|| "-".to_string(), |o| o.to_string());
            let status = match r.status {
                Status::Pass => "pass",
                Status::Violation => "VIOLATION",
                Status::Mismatch => "mismatch",
                Status::Error => "error",
            };
            let _ = write!(s, "{status:<10} {name:<32} expected {:<12} got {got:<8} iterations {}", r.expected.to_string(), r.iterations);
            if let Some(m) = &r.message {
                let _ = write!(s, "  ({m})");
            }
            s.push('\n');
        }
        let pass = self.rows.iter().filter(|r| r.status == Status::Pass).count();
        let _ = writeln!(s, "{pass}/{} passed", self.rows.len());
        s
    }
}

/// Formula files in `dir` (extension `.qd`), sorted by name, each with its
/// expectation read from the sibling `.expect` file.
pub fn corpus_entries(dir: &Path) -> Result<Vec<(PathBuf, Expectation)>, CliError> {
    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "qd"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|file| {
            let sidecar = file.with_extension("expect");
            if !sidecar.exists() {
                return Err(CliError::MissingSidecar(file));
            }
            let text = fs::read_to_string(&sidecar).map_err(io(&sidecar))?;
            let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("").to_string();
            let e = Expectation::parse(&line).ok_or(CliError::BadSidecar { path: sidecar, line })?;
            Ok((file, e))
        })
        .collect()
}

/// Runs every corpus file; an `UNKNOWN@b` label overrides the budget with `b`.
pub fn corpus(config: &RunConfig, dir: &Path) -> Result<CorpusSummary, CliError> {
    config.validate()?;
    let mut summary = CorpusSummary::default();
    for (file, expected) in corpus_entries(dir)? {
        let mut cfg = config.clone();
        if let Expectation::Unknown(b) = expected {
            cfg.budget = b;
        }
        let row = match fs::read_to_string(&file)
            .map_err(|source| CliError::Io {
                path: file.clone(),
                source,
            })
            .and_then(|src| solve(&cfg, &src))
        {
            Ok(v) => CorpusRow {
                status: expected.judge(v.outcome),
                got: Some(v.outcome),
                iterations: v.iterations,
                expected,
                file,
                message: None,
            },
            Err(e) => CorpusRow {
                file,
                expected,
                got: None,
                iterations: 0,
                status: Status::Error,
                message: Some(e.to_string()),
            },
        };
        summary.rows.push(row);
    }
    Ok(summary)
}
