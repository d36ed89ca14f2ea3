//! Independent oracles and property suites.

mod cone_tail;
mod coupling;
mod inclusions;
mod oracle;
mod theorem_l;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use cone_tail::{check_cone_tail, poisson_slope, ConeTailConfig};
pub use coupling::{check_coupling_monotonicity, coupling_suite, mutual_growth};
pub use inclusions::{check_inclusions, InclusionConfig, PlanarCone};
pub use oracle::{oracle_backward, oracle_cluster, oracle_sweep};
pub use theorem_l::{check_theorem_l, theorem_l_suite, DECOUPLE};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub seed: Option<u64>,
    pub inputs: String,
    pub expected: String,
    pub got: String,
}

/// Outcome of one suite. `pass` is true exactly when `failures` is empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub cases: u64,
    pub failures: Vec<Failure>,
    pub pass: bool,
    /// Named diagnostics (negative-control counts, slopes, ...).
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new(suite: impl Into<String>) -> Self {
        VerificationReport { suite: suite.into(), cases: 0, failures: Vec::new(), pass: true, metrics: BTreeMap::new(), notes: Vec::new() }
    }

    pub fn fail(&mut self, seed: Option<u64>, inputs: impl Into<String>, expected: impl ToString, got: impl ToString) {
        self.failures.push(Failure { seed, inputs: inputs.into(), expected: expected.to_string(), got: got.to_string() });
        self.pass = false;
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    /// Adds `value` to a summed metric.
    pub fn add_metric(&mut self, name: &str, value: f64) {
        *self.metrics.entry(name.to_string()).or_insert(0.0) += value;
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Sums cases and metrics and concatenates failures and notes, in order.
    pub fn merge(suite: impl Into<String>, parts: impl IntoIterator<Item = VerificationReport>) -> Self {
        let mut out = VerificationReport::new(suite);
        for part in parts {
            out.cases += part.cases;
            out.failures.extend(part.failures);
            for (k, v) in part.metrics {
                out.add_metric(&k, v);
            }
            out.notes.extend(part.notes);
        }
        out.pass = out.failures.is_empty();
        out
    }

    /// One line: suite, verdict, cases and failure count.
    pub fn summary(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        format!("{verdict} {}: {} cases, {} failures", self.suite, self.cases, self.failures.len())
    }
}
