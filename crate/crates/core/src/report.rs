//! Serializable verification reports.
//!
//! Reports are deterministic for a fixed (model, seed, config): check entries
//! are appended in a fixed order, parameter tables are ordered maps, and all
//! reductions over samples happen in sample order, so two runs of the same
//! invocation serialize to byte-identical JSON.

use std::collections::BTreeMap;

use serde::Serialize;

pub const REPORT_SCHEMA: &str = "crgeo-report/1";

/// One verified identity: its residual against a fixed tolerance, tagged with
/// the identity it checks.
#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub name: String,
    /// The identity being verified, written out as a formula.
    pub anchor: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub samples: usize,
    pub seed: u64,
}

impl CheckEntry {
    pub fn new(
        name: impl Into<String>,
        anchor: impl Into<String>,
        max_residual: f64,
        tolerance: f64,
        samples: usize,
        seed: u64,
    ) -> CheckEntry {
        CheckEntry {
            name: name.into(),
            anchor: anchor.into(),
            max_residual,
            tolerance,
            pass: max_residual <= tolerance,
            samples,
            seed,
        }
    }
}

/// A full verification report for one model and invocation.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub version: String,
    pub model: String,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
    pub samples: usize,
    pub order: usize,
    pub checks: Vec<CheckEntry>,
    pub pass: bool,
    /// Free-form scalar outputs (curvature values, conserved means, ...).
    pub values: BTreeMap<String, f64>,
    /// Non-numeric findings (classification tags, caveats).
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(model: &str, params: BTreeMap<String, f64>, seed: u64, samples: usize, order: usize) -> Report {
        Report {
            schema: REPORT_SCHEMA,
            version: env!("CARGO_PKG_VERSION").to_string(),
            model: model.to_string(),
            params,
            seed,
            samples,
            order,
            checks: Vec::new(),
            pass: true,
            values: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, entry: CheckEntry) {
        self.pass &= entry.pass;
        self.checks.push(entry);
    }

    pub fn value(&mut self, key: &str, v: f64) {
        self.values.insert(key.to_string(), v);
    }

    pub fn note(&mut self, n: impl Into<String>) {
        self.notes.push(n.into());
    }

    /// Merge another report's checks/values/notes (used by the `all` runner).
    pub fn absorb(&mut self, prefix: &str, other: Report) {
        for mut c in other.checks {
            c.name = format!("{prefix}.{}", c.name);
            self.push(c);
        }
        for (k, v) in other.values {
            self.values.insert(format!("{prefix}.{k}"), v);
        }
        for n in other.notes {
            self.notes.push(format!("{prefix}: {n}"));
        }
    }

    /// Human-readable table, one line per check.
    pub fn text_summary(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("model: {}   seed {}   samples {}   order {}\n", self.model, self.seed, self.samples, self.order));
        for (k, v) in &self.params {
            out.push_str(&format!("param {k} = {v}\n"));
        }
        for c in &self.checks {
            out.push_str(&format!(
                "[{}] {:<44} max_residual {:>12.3e}  tol {:>8.1e}   {}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.max_residual,
                c.tolerance,
                c.anchor
            ));
        }
        for (k, v) in &self.values {
            out.push_str(&format!("value {k} = {v:.12e}\n"));
        }
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        out.push_str(&format!("overall: {}\n", if self.pass { "PASS" } else { "FAIL" }));
        out
    }
}
