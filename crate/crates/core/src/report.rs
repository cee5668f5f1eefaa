//! Machine-readable verification report entries shared by the check suites
//! and the command-line tools.

use serde::Serialize;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One named check with its residual and threshold.
#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckEntry {
    /// Passes when `residual <= threshold`.
    pub fn residual(name: impl Into<String>, residual: f64, threshold: f64) -> Self {
        CheckEntry {
            name: name.into(),
            residual,
            threshold,
            passed: residual <= threshold,
            detail: None,
        }
    }

    /// Passes when `value >= minimum` (for counts, orders, ranks).
    pub fn at_least(name: impl Into<String>, value: f64, minimum: f64) -> Self {
        CheckEntry {
            name: name.into(),
            residual: value,
            threshold: minimum,
            passed: value >= minimum,
            detail: None,
        }
    }

    pub fn exact(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        CheckEntry {
            name: name.into(),
            residual: if ok { 0.0 } else { 1.0 },
            threshold: 0.0,
            passed: ok,
            detail: Some(detail.into()),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<CheckEntry>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn new(suite: impl Into<String>, seed: u64, checks: Vec<CheckEntry>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        SuiteReport {
            schema_version: REPORT_SCHEMA_VERSION,
            suite: suite.into(),
            seed,
            checks,
            passed,
        }
    }
}
