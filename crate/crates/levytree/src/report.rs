//! Test reports and their JSON-lines persistence.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

/// Version of the report schema written to the `version` field.
pub const SCHEMA_VERSION: u32 = 1;

/// Default significance floor.
pub const DEFAULT_ALPHA: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Statistical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatEntry {
    pub functional: String,
    pub statistic: f64,
    /// Always `None` in exact reports.
    pub p: Option<f64>,
}

/// One line of a report file. `params` is a sorted map, so the same inputs
/// serialize to the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub suite: String,
    pub mode: Mode,
    pub params: Map<String, Value>,
    pub seed: Option<u64>,
    pub stats: Vec<StatEntry>,
    pub pass: bool,
    pub runtime_ms: u64,
    pub version: u32,
}

impl TestReport {
    pub fn new(suite: &str, mode: Mode, seed: Option<u64>) -> Self {
        TestReport {
            suite: suite.to_string(),
            mode,
            params: Map::new(),
            seed,
            stats: Vec::new(),
            pass: false,
            runtime_ms: 0,
            version: SCHEMA_VERSION,
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn set_param(&mut self, key: &str, value: impl Into<Value>) {
        self.params.insert(key.to_string(), value.into());
    }

    pub fn push_stat(&mut self, functional: impl Into<String>, statistic: f64, p: Option<f64>) {
        self.stats.push(StatEntry { functional: functional.into(), statistic, p });
    }

    /// Smallest p-value, if any.
    pub fn min_p(&self) -> Option<f64> {
        self.stats.iter().filter_map(|s| s.p).reduce(f64::min)
    }

    pub fn to_json_line(&self) -> CliResult<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// The report with `runtime_ms` cleared, for comparing runs.
    pub fn without_timing(&self) -> TestReport {
        TestReport { runtime_ms: 0, ..self.clone() }
    }
}

impl fmt::Display for TestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {} ({:?}, {} stats", self.suite, self.mode, self.stats.len())?;
        if let Some(p) = self.min_p() {
            write!(f, ", min p = {p:.3e}")?;
        }
        write!(f, ", {} ms)", self.runtime_ms)
    }
}

/// Appends one JSON line per report.
pub fn append_reports(file: &Path, reports: &[TestReport]) -> CliResult<()> {
    let mut out = OpenOptions::new().create(true).append(true).open(file)?;
    let mut buf = String::new();
    for r in reports {
        buf.push_str(&r.to_json_line()?);
        buf.push('\n');
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

pub fn read_reports(file: &Path) -> CliResult<Vec<TestReport>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(file)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|e| CliError::Input(format!("line {}: {e}", i + 1)))?;
        out.push(r);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub lines: Vec<String>,
}

impl Summary {
    pub fn all_pass(&self) -> bool {
        self.passed == self.total
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            writeln!(f, "{l}")?;
        }
        write!(f, "{} of {} reports pass", self.passed, self.total)
    }
}

pub fn summarize(reports: &[TestReport]) -> Summary {
    Summary {
        total: reports.len(),
        passed: reports.iter().filter(|r| r.pass).count(),
        lines: reports.iter().map(|r| r.to_string()).collect(),
    }
}

/// Monte Carlo settings shared by the statistical suites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    /// Contour intervals per sample; trees have `grid / 2` edges.
    pub grid: usize,
    /// Replicas per side.
    pub replicas: usize,
    pub seed: u64,
    pub alpha: f64,
    /// Thread count; results do not depend on it.
    pub workers: Option<usize>,
}

impl McConfig {
    pub fn new(grid: usize, replicas: usize, seed: u64) -> CliResult<Self> {
        McConfig { grid, replicas, seed, alpha: DEFAULT_ALPHA, workers: None }.validated()
    }

    pub fn with_alpha(self, alpha: f64) -> CliResult<Self> {
        McConfig { alpha, ..self }.validated()
    }

    pub fn with_workers(self, workers: Option<usize>) -> CliResult<Self> {
        McConfig { workers, ..self }.validated()
    }

    pub fn validated(self) -> CliResult<Self> {
        if self.replicas < 100 {
            return Err(CliError::Input(format!("at least 100 replicas are needed, got {}", self.replicas)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 0.05) {
            return Err(CliError::Input(format!("alpha must lie in (0, 0.05], got {}", self.alpha)));
        }
        if self.grid < 2 {
            return Err(CliError::Input(format!("grid must be at least 2, got {}", self.grid)));
        }
        if self.workers == Some(0) {
            return Err(CliError::Input("worker count must be positive".into()));
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TestReport {
        let mut r = TestReport::new("fixed-s", Mode::Statistical, Some(7)).param("replicas", 200).param("alpha", 0.001);
        r.push_stat("sup", 0.05, Some(0.4));
        r.push_stat("area", 0.04, Some(0.7));
        r.pass = true;
        r.runtime_ms = 12;
        r
    }

    #[test]
    fn json_line_schema() {
        let line = sample().to_json_line().unwrap();
        assert_eq!(
            line,
            r#"{"suite":"fixed-s","mode":"statistical","params":{"alpha":0.001,"replicas":200},"seed":7,"stats":[{"functional":"sup","statistic":0.05,"p":0.4},{"functional":"area","statistic":0.04,"p":0.7}],"pass":true,"runtime_ms":12,"version":1}"#
        );
        let mut exact = TestReport::new("reroot-bijection", Mode::Exact, None);
        exact.push_stat("not_dyck", 0.0, None);
        let line = exact.to_json_line().unwrap();
        assert!(line.contains(r#""mode":"exact""#) && line.contains(r#""p":null"#) && line.contains(r#""seed":null"#));
    }

    #[test]
    fn append_and_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("out.jsonl");
        let mut failing = sample();
        failing.pass = false;
        append_reports(&file, &[sample()]).unwrap();
        append_reports(&file, &[failing.clone()]).unwrap();
        let back = read_reports(&file).unwrap();
        assert_eq!(back, vec![sample(), failing]);
        let s = summarize(&back);
        assert_eq!((s.total, s.passed, s.all_pass()), (2, 1, false));
        assert!(s.to_string().ends_with("1 of 2 reports pass"));
    }

    #[test]
    fn timing_is_dropped() {
        assert_eq!(sample().without_timing().runtime_ms, 0);
        assert_eq!(sample().min_p(), Some(0.4));
    }

    #[test]
    fn config_validation() {
        assert!(McConfig::new(64, 100, 1).is_ok());
        assert!(McConfig::new(64, 99, 1).is_err());
        assert!(McConfig::new(64, 100, 1).unwrap().with_alpha(0.1).is_err());
        assert!(McConfig::new(64, 100, 1).unwrap().with_alpha(0.0).is_err());
        assert!(McConfig::new(64, 100, 1).unwrap().with_alpha(0.05).is_ok());
        assert!(McConfig::new(64, 100, 1).unwrap().with_workers(Some(0)).is_err());
    }
}
