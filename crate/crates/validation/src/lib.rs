//! Pass/fail reporting for the acceptance checks.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

/// Result of one check: whether it passed and what was measured.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }

    /// Conjunction of parts, each rendered as `name=value [ok|FAIL]`.
    pub fn all(parts: Vec<(bool, String)>) -> Self {
        let passed = parts.iter().all(|(ok, _)| *ok);
        let detail = parts
            .into_iter()
            .map(|(ok, text)| format!("{text} [{}]", if ok { "ok" } else { "FAIL" }))
            .collect::<Vec<_>>()
            .join("; ");
        Self { passed, detail }
    }
}

#[derive(Debug)]
pub struct Record {
    pub id: String,
    pub title: String,
    pub outcome: Outcome,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl Record {
    pub fn passed(&self) -> bool {
        self.outcome.passed && self.elapsed <= self.budget
    }

    pub fn line(&self) -> String {
        let mut detail = self.outcome.detail.clone();
        if self.elapsed > self.budget {
            detail.push_str(&format!("; runtime over budget of {:.0?}", self.budget));
        }
        format!(
            "criterion {} {}: {} ({:.2}s) {}",
            self.id,
            self.title,
            if self.passed() { "PASS" } else { "FAIL" },
            self.elapsed.as_secs_f64(),
            detail
        )
    }
}

/// Runs checks in order, printing one line per check as it finishes.
#[derive(Debug, Default)]
pub struct Report {
    records: Vec<Record>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    /// A panicking check is reported as a failure with the panic message.
    pub fn check<F>(&mut self, id: &str, title: &str, budget: Duration, f: F) -> &Record
    where
        F: FnOnce() -> Outcome,
    {
        let start = Instant::now();
        let outcome = match panic::catch_unwind(AssertUnwindSafe(f)) {
            Ok(o) => o,
            Err(payload) => {
                let message = payload
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                Outcome::new(false, format!("panicked: {message}"))
            }
        };
        let record = Record {
            id: id.to_owned(),
            title: title.to_owned(),
            outcome,
            elapsed: start.elapsed(),
            budget,
        };
        println!("{}", record.line());
        self.records.push(record);
        self.records.last().unwrap()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| !r.passed()).count()
    }

    /// Prints the tally; failure if any check failed.
    pub fn finish(self) -> ExitCode {
        let failed = self.failures();
        println!(
            "acceptance: {} passed, {} failed of {}",
            self.records.len() - failed,
            failed,
            self.records.len()
        );
        if failed == 0 {
            ExitCode::SUCCESS
        } else {
            ExitCode::FAILURE
        }
    }
}
