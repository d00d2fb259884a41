//! Result records: an estimate, its interval, the target it is checked
//! against and the tolerance used.

use std::collections::BTreeMap;

use nearelastic_core::stats::Proportion;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Version of the result file layout.
pub const SCHEMA_VERSION: u32 = 1;

/// How an estimate is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Target inside `[lo - tol, hi + tol]`.
    Within,
    /// `hi <= target + tol`.
    AtMost,
    /// `lo >= target - tol`.
    AtLeast,
    /// Informational, always passes.
    Report,
}

impl Comparison {
    pub fn judge(self, ci: [f64; 2], target: f64, tolerance: f64) -> bool {
        let [lo, hi] = ci;
        match self {
            Comparison::Within => lo - tolerance <= target && target <= hi + tolerance,
            Comparison::AtMost => hi <= target + tolerance,
            Comparison::AtLeast => lo >= target - tolerance,
            Comparison::Report => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub quantity: String,
    pub parameters: BTreeMap<String, Value>,
    pub estimate: f64,
    pub ci: [f64; 2],
    pub target: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
    /// Whether a failure of this record fails the run.
    pub assert: bool,
    pub trials: u64,
    pub failures: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ResultRecord {
    pub fn new(experiment: &str, quantity: &str, estimate: f64, ci: [f64; 2], comparison: Comparison, target: f64, tolerance: f64) -> Self {
        let (lo, hi) = if ci[0] <= ci[1] { (ci[0], ci[1]) } else { (ci[1], ci[0]) };
        let ci = [lo, hi];
        let pass = estimate.is_finite() && comparison.judge(ci, target, tolerance);
        ResultRecord {
            experiment: experiment.to_string(),
            quantity: quantity.to_string(),
            parameters: BTreeMap::new(),
            estimate,
            ci,
            target,
            tolerance,
            comparison,
            pass: pass || comparison == Comparison::Report,
            assert: comparison != Comparison::Report,
            trials: 0,
            failures: 0,
            note: None,
        }
    }

    /// A deterministic value with a degenerate interval.
    pub fn exact(experiment: &str, quantity: &str, value: f64, comparison: Comparison, target: f64, tolerance: f64) -> Self {
        Self::new(experiment, quantity, value, [value, value], comparison, target, tolerance).counts(1, 0)
    }

    /// A binomial frequency with its Wilson interval.
    pub fn proportion(experiment: &str, quantity: &str, p: &Proportion, target: f64) -> Self {
        Self::new(experiment, quantity, p.estimate, [p.lo, p.hi], Comparison::Within, target, 0.0).counts(p.trials, 0)
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.parameters
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn counts(mut self, trials: u64, failures: u64) -> Self {
        self.trials = trials;
        self.failures = failures;
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Drops the assertion flag, for runs without `--assert`.
    pub fn asserted(mut self, on: bool) -> Self {
        self.assert &= on;
        self
    }

    /// Failed and asserted.
    pub fn is_fatal(&self) -> bool {
        self.assert && !self.pass
    }

    /// One line for terminal output.
    pub fn summary(&self) -> String {
        let params: Vec<String> = self.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!(
            "{} {} {} [{}]: {:.6} in [{:.6}, {:.6}] vs {:?} {:.6} (tol {:.3e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.experiment,
            self.quantity,
            params.join(" "),
            self.estimate,
            self.ci[0],
            self.ci[1],
            self.comparison,
            self.target,
            self.tolerance
        )
    }
}
