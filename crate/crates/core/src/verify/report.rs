use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Passed,
    Failed,
    /// The check's gate was not met; decided by a stated threshold.
    NotApplicable,
    /// Report-only check with no pass/fail criterion.
    Informational,
}

/// One point of a residual time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResidualSample {
    pub t: f64,
    pub sup: f64,
    pub l2: f64,
    pub masked: usize,
}

/// Outcome of an independently judged part of a check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubCheck {
    pub name: String,
    pub status: CheckStatus,
    pub tolerance: f64,
    pub worst_sup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub status: CheckStatus,
    pub informational: bool,
    pub tolerance: f64,
    pub residuals: Vec<ResidualSample>,
    pub masked_total: usize,
    pub notes: Vec<String>,
    pub parts: Vec<SubCheck>,
    /// Extra named series aligned with `residuals`.
    pub series: BTreeMap<String, Vec<f64>>,
}

fn all_within(residuals: &[ResidualSample], tolerance: f64) -> bool {
    residuals.iter().all(|r| r.sup.is_finite() && r.sup <= tolerance)
}

impl CheckReport {
    /// Pass/fail report: passes iff every recorded sup residual is within
    /// tolerance.
    pub fn judged(name: &str, tolerance: f64, residuals: Vec<ResidualSample>) -> Self {
        let status = if all_within(&residuals, tolerance) {
            CheckStatus::Passed
        } else {
            CheckStatus::Failed
        };
        let masked_total = residuals.iter().map(|r| r.masked).sum();
        Self {
            name: name.to_string(),
            status,
            informational: false,
            tolerance,
            residuals,
            masked_total,
            notes: Vec::new(),
            parts: Vec::new(),
            series: BTreeMap::new(),
        }
    }

    pub fn informational(name: &str, tolerance: f64, residuals: Vec<ResidualSample>) -> Self {
        let mut r = Self::judged(name, tolerance, residuals);
        r.status = CheckStatus::Informational;
        r.informational = true;
        r
    }

    pub fn not_applicable(name: &str, tolerance: f64, reason: impl Into<String>) -> Self {
        let mut r = Self::judged(name, tolerance, Vec::new());
        r.status = CheckStatus::NotApplicable;
        r.notes.push(reason.into());
        r
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn with_series(mut self, name: &str, values: Vec<f64>) -> Self {
        self.series.insert(name.to_string(), values);
        self
    }

    /// Adds a judged sub-check; a failing part fails the whole report.
    pub fn with_part(mut self, name: &str, tolerance: f64, worst_sup: f64) -> Self {
        let ok = worst_sup.is_finite() && worst_sup <= tolerance;
        let status = if ok { CheckStatus::Passed } else { CheckStatus::Failed };
        if !ok && self.status == CheckStatus::Passed {
            self.status = CheckStatus::Failed;
        }
        self.parts.push(SubCheck {
            name: name.to_string(),
            status,
            tolerance,
            worst_sup,
        });
        self
    }

    /// True unless the check failed. Gated and informational checks count as
    /// passing for the run's exit status.
    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Failed
    }

    pub fn worst_sup(&self) -> f64 {
        self.residuals.iter().map(|r| r.sup).fold(0.0, f64::max)
    }

    pub fn worst_l2(&self) -> f64 {
        self.residuals.iter().map(|r| r.l2).fold(0.0, f64::max)
    }
}
