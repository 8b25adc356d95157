use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use kundt::SamplePlan;

use crate::input::InputDigest;

#[derive(Serialize)]
pub struct PlanInfo {
    pub points: usize,
    pub seed: u64,
    /// `[lo, hi]` per chart coordinate `(u, v, x3, ...)`.
    pub ranges: Vec<(f64, f64)>,
}

impl From<&SamplePlan> for PlanInfo {
    fn from(p: &SamplePlan) -> PlanInfo {
        PlanInfo {
            points: p.count,
            seed: p.seed,
            ranges: p.ranges.clone(),
        }
    }
}

#[derive(Serialize, Default)]
pub struct Tolerances {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
}

#[derive(Serialize)]
pub struct Section {
    pub passed: bool,
    /// One line for the terminal.
    #[serde(skip)]
    pub summary: String,
    #[serde(flatten)]
    pub body: Value,
}

#[derive(Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub inputs: Vec<InputDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanInfo>,
    pub tolerances: Tolerances,
    pub sections: BTreeMap<String, Section>,
    pub failing_sections: Vec<String>,
    pub passed: bool,
}

impl Report {
    pub fn new(command: &str, with_timestamp: bool) -> Report {
        let timestamp = with_timestamp.then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
        Report {
            tool: "kundt",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            timestamp,
            inputs: Vec::new(),
            plan: None,
            tolerances: Tolerances::default(),
            sections: BTreeMap::new(),
            failing_sections: Vec::new(),
            passed: true,
        }
    }

    pub fn section(&mut self, name: &str, passed: bool, summary: impl Into<String>, body: Value) {
        if !passed {
            self.passed = false;
            self.failing_sections.push(name.to_string());
        }
        self.sections.insert(
            name.to_string(),
            Section {
                passed,
                summary: summary.into(),
                body,
            },
        );
    }

    pub fn print_summary(&self) {
        for (name, s) in &self.sections {
            let mark = if s.passed { "pass" } else { "FAIL" };
            eprintln!("{mark:4} {name}: {}", s.summary);
        }
    }
}
