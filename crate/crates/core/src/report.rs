//! Structured verification reports: one record per check with residual
//! statistics against a stated tolerance, plus the configuration echo and
//! seed needed to reproduce a run byte for byte.

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, max: f64, mean: f64, tolerance: f64) -> CheckRecord {
        CheckRecord {
            name: name.into(),
            max_residual: max,
            mean_residual: mean,
            tolerance,
            pass: max < tolerance,
        }
    }

    /// Record from a list of residual samples.
    pub fn from_samples(
        name: impl Into<String>,
        samples: &[f64],
        tolerance: f64,
    ) -> CheckRecord {
        let max = samples.iter().copied().fold(0.0, f64::max);
        let mean = if samples.is_empty() {
            0.0
        } else {
            samples.iter().sum::<f64>() / samples.len() as f64
        };
        CheckRecord::new(name, max, mean, tolerance)
    }

    /// Check that a value is *above* a floor (detector-style records):
    /// residual is the shortfall, so pass means value ≥ floor.
    pub fn value_above(name: impl Into<String>, value: f64, floor: f64) -> CheckRecord {
        let shortfall = (floor - value).max(0.0);
        CheckRecord {
            name: name.into(),
            max_residual: shortfall,
            mean_residual: value,
            tolerance: f64::MIN_POSITIVE,
            pass: value >= floor,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
    pub notes: Vec<String>,
    /// Wall-clock duration; excluded from determinism comparisons.
    pub elapsed_ms: Option<u64>,
}

impl VerificationReport {
    pub fn new(command: impl Into<String>, config: serde_json::Value, seed: u64) -> Self {
        VerificationReport {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            config,
            seed,
            checks: Vec::new(),
            notes: Vec::new(),
            elapsed_ms: None,
        }
    }

    pub fn push(&mut self, check: CheckRecord) {
        self.checks.push(check);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Serialization with the timing field removed, for determinism checks.
    pub fn deterministic_json(&self) -> serde_json::Result<String> {
        let mut clone = self.clone();
        clone.elapsed_ms = None;
        serde_json::to_string_pretty(&clone)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_flag_tracks_tolerance() {
        let c = CheckRecord::new("x", 1e-7, 1e-8, 1e-6);
        assert!(c.pass);
        let c = CheckRecord::new("x", 1e-5, 1e-8, 1e-6);
        assert!(!c.pass);
    }

    #[test]
    fn deterministic_json_strips_timing() {
        let mut r = VerificationReport::new("test", serde_json::json!({"a": 1}), 7);
        r.push(CheckRecord::new("c", 0.0, 0.0, 1.0));
        r.elapsed_ms = Some(1234);
        let a = r.deterministic_json().unwrap();
        r.elapsed_ms = Some(9999);
        let b = r.deterministic_json().unwrap();
        assert_eq!(a, b);
    }
}
