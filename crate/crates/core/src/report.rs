//! Pass/fail records shared by every pointwise check.

use serde::Serialize;

use crate::sample::Point;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Largest offending magnitude seen (absolute or relative, see `detail`).
    pub max_value: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_point: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    pub fn structural(name: &str, passed: bool, detail: impl Into<String>) -> Check {
        Check {
            name: name.to_string(),
            passed,
            max_value: if passed { 0.0 } else { 1.0 },
            tolerance: 0.0,
            worst_point: None,
            detail: detail.into(),
        }
    }

    /// Passes when every tracked value stays at or below `tolerance`.
    pub fn bounded(name: &str, worst: &Worst, tolerance: f64) -> Check {
        Check {
            name: name.to_string(),
            passed: worst.value <= tolerance && !worst.failed,
            max_value: worst.value,
            tolerance,
            worst_point: worst.point.as_ref().map(|p| p.coords().to_vec()),
            detail: worst.note.clone(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Check {
        self.detail = detail.into();
        self
    }
}

/// Running maximum of a nonnegative error measure with the point it came from.
#[derive(Clone, Debug, Default)]
pub struct Worst {
    pub value: f64,
    pub point: Option<Point>,
    pub failed: bool,
    pub note: String,
}

impl Worst {
    pub fn new() -> Worst {
        Worst::default()
    }

    pub fn observe(&mut self, value: f64, at: &Point) {
        if value.is_nan() {
            self.fail(at, "non-finite value");
            return;
        }
        if value > self.value || self.point.is_none() {
            self.value = self.value.max(value);
            self.point = Some(at.clone());
        }
    }

    /// Record a hard failure, such as an evaluation domain error.
    pub fn fail(&mut self, at: &Point, note: impl Into<String>) {
        if !self.failed {
            self.failed = true;
            self.value = f64::INFINITY;
            self.point = Some(at.clone());
            self.note = note.into();
        }
    }

    pub fn merge(&mut self, other: &Worst) {
        if other.failed && !self.failed {
            *self = other.clone();
        } else if !self.failed && other.value > self.value {
            self.value = other.value;
            self.point = other.point.clone();
        }
    }
}

/// `|a - b| / max(|a|, |b|, 1e-6)`
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}
