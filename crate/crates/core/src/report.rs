//! Sample-based assumption reports shared by the potential and
//! proliferation validators.

use std::fmt::Write as _;

use serde::Serialize;

/// Slack below which an inequality is considered violated.
pub const SLACK_TOLERANCE: f64 = -1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    /// Smallest value of `rhs - lhs` over the samples (negative means violated).
    pub worst_slack: f64,
    /// Sample point attaining the worst slack.
    pub worst_at: f64,
    pub passed: bool,
    /// Reason the check was not evaluated.
    pub skipped: Option<String>,
}

impl Check {
    pub fn skipped(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            worst_slack: f64::NAN,
            worst_at: f64::NAN,
            passed: true,
            skipped: Some(reason.into()),
        }
    }
}

/// Tracks the minimum slack of one inequality over a sweep.
#[derive(Clone, Debug)]
pub(crate) struct SlackTracker {
    name: String,
    worst: f64,
    at: f64,
}

impl SlackTracker {
    pub(crate) fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            worst: f64::INFINITY,
            at: f64::NAN,
        }
    }

    pub(crate) fn record(&mut self, s: f64, slack: f64) {
        // NaN slack counts as a violation
        if !(slack >= self.worst) {
            self.worst = if slack.is_nan() {
                f64::NEG_INFINITY
            } else {
                slack
            };
            self.at = s;
        }
    }

    pub(crate) fn finish(self) -> Check {
        Check {
            passed: self.worst >= SLACK_TOLERANCE,
            name: self.name,
            worst_slack: self.worst,
            worst_at: self.at,
            skipped: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    pub title: String,
    pub checks: Vec<Check>,
    /// Fitted constants and other scalar findings.
    pub fitted: Vec<(String, f64)>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn fitted(&self, name: &str) -> Option<f64> {
        self.fitted.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.title);
        for c in &self.checks {
            let status = match (&c.skipped, c.passed) {
                (Some(reason), _) => format!("SKIP ({reason})"),
                (None, true) => "PASS".to_string(),
                (None, false) => "FAIL".to_string(),
            };
            let _ = writeln!(
                out,
                "  {:<28} {:<6} worst slack {:>14.6e} at s = {:.6}",
                c.name, status, c.worst_slack, c.worst_at
            );
        }
        for (name, value) in &self.fitted {
            let _ = writeln!(out, "  {name} = {value:.6e}");
        }
        let _ = writeln!(
            out,
            "overall: {}",
            if self.passed() { "PASS" } else { "FAIL" }
        );
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,status,worst_slack,worst_at\n");
        for c in &self.checks {
            let status = match (&c.skipped, c.passed) {
                (Some(_), _) => "skip",
                (None, true) => "pass",
                (None, false) => "fail",
            };
            let _ = writeln!(
                out,
                "{},{},{:e},{:e}",
                c.name, status, c.worst_slack, c.worst_at
            );
        }
        for (name, value) in &self.fitted {
            let _ = writeln!(out, "{name},fitted,{value:e},");
        }
        out
    }
}

/// `n` uniformly spaced samples covering `[-bound, bound]` inclusive.
pub(crate) fn symmetric_samples(bound: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |i| -bound + 2.0 * bound * i as f64 / (n - 1) as f64)
}
