//! Check records and reports shared by every audit.

use serde::{Deserialize, Serialize};

use crate::limits::LimitStatus;
use crate::point::Point;

/// Closed set of check outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The rescaled distance collapses to zero for distinct points.
    Degenerate,
    /// A limit could not be classified.
    Inconclusive,
    /// The hypothesis of an implication was not met.
    Vacuous,
}

impl CheckStatus {
    pub fn is_ok(self) -> bool {
        matches!(self, CheckStatus::Pass | CheckStatus::Vacuous)
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        }
    }

    fn rank(self) -> u8 {
        match self {
            CheckStatus::Pass => 0,
            CheckStatus::Vacuous => 1,
            CheckStatus::Inconclusive => 2,
            CheckStatus::Degenerate => 3,
            CheckStatus::Fail => 4,
        }
    }

    /// Worst-of combination: `Fail > Degenerate > Inconclusive > Vacuous > Pass`.
    pub fn worst(self, other: CheckStatus) -> CheckStatus {
        if other.rank() > self.rank() {
            other
        } else {
            self
        }
    }
}

impl std::fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Degenerate => "degenerate",
            CheckStatus::Inconclusive => "inconclusive",
            CheckStatus::Vacuous => "vacuous",
        };
        f.write_str(s)
    }
}

/// Sample tuple that produced a failure (or the worst residual).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub label: String,
    pub points: Vec<Vec<f64>>,
    pub scalars: Vec<f64>,
}

impl Witness {
    pub fn new(label: impl Into<String>) -> Self {
        Witness {
            label: label.into(),
            points: Vec::new(),
            scalars: Vec::new(),
        }
    }

    pub fn point(mut self, p: &Point) -> Self {
        self.points.push(p.to_vec());
        self
    }

    pub fn scalar(mut self, v: f64) -> Self {
        self.scalars.push(v);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: CheckStatus,
    /// Worst residual over the check's samples; `null` in JSON when a limit
    /// failed to converge.
    pub residual: f64,
    pub witness: Option<Witness>,
    pub note: Option<String>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, status: CheckStatus, residual: f64) -> Self {
        CheckRecord {
            name: name.into(),
            status,
            residual,
            witness: None,
            note: None,
        }
    }

    /// Pass iff `residual < tol`.
    pub fn threshold(name: impl Into<String>, residual: f64, tol: f64) -> Self {
        CheckRecord::new(name, CheckStatus::from_bool(residual < tol), residual)
    }

    pub fn with_witness(mut self, w: Witness) -> Self {
        self.witness = Some(w);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Running worst-residual tracker with a witness for the worst sample.
#[derive(Debug, Clone)]
pub struct Worst {
    pub residual: f64,
    pub status: CheckStatus,
    pub witness: Option<Witness>,
}

impl Default for Worst {
    fn default() -> Self {
        Worst {
            residual: 0.0,
            status: CheckStatus::Pass,
            witness: None,
        }
    }
}

impl Worst {
    /// Folds one sample in. The witness follows the worst sample, ranked by
    /// status and then residual; ties keep the earlier sample, so folding in
    /// index order is deterministic.
    pub fn observe(&mut self, residual: f64, status: CheckStatus, witness: impl FnOnce() -> Witness) {
        let residual = if residual.is_nan() { f64::INFINITY } else { residual };
        let key = (status.rank(), residual);
        let current = (self.status.rank(), self.residual);
        if self.witness.is_none() || key.0 > current.0 || (key.0 == current.0 && key.1 > current.1) {
            self.witness = Some(witness());
        }
        self.residual = self.residual.max(residual);
        self.status = self.status.worst(status);
    }

    pub fn into_record(self, name: impl Into<String>) -> CheckRecord {
        CheckRecord {
            name: name.into(),
            status: self.status,
            residual: self.residual,
            witness: self.witness,
            note: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub title: String,
    pub records: Vec<CheckRecord>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Report {
            title: title.into(),
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, r: CheckRecord) {
        self.records.push(r);
    }

    pub fn extend(&mut self, other: Report) {
        self.records.extend(other.records);
    }

    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.status.is_ok())
    }

    pub fn status(&self) -> CheckStatus {
        self.records.iter().fold(CheckStatus::Pass, |s, r| s.worst(r.status))
    }

    pub fn record(&self, name: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn worst_residual(&self) -> f64 {
        self.records.iter().fold(0.0, |m, r| {
            if r.residual.is_nan() {
                f64::INFINITY
            } else {
                m.max(r.residual)
            }
        })
    }
}

pub fn limit_status_check(s: LimitStatus) -> CheckStatus {
    match s {
        LimitStatus::Converged => CheckStatus::Pass,
        LimitStatus::Inconclusive => CheckStatus::Inconclusive,
        LimitStatus::Oscillating | LimitStatus::Diverging => CheckStatus::Fail,
    }
}
