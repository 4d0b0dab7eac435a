//! Machine-readable verification results.

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub parameters: Value,
    pub expected: Value,
    pub observed: Value,
    pub tolerance: Value,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(check: &str, parameters: Value, expected: Value, observed: Value, tolerance: Value, pass: bool) -> Self {
        CheckReport { check: check.to_string(), parameters, expected, observed, tolerance, pass }
    }
}

/// A batch of checks; passes when every check does.
#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub tool: String,
    pub version: String,
    pub checks: Vec<CheckReport>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new(checks: Vec<CheckReport>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        VerificationReport {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            checks,
            pass,
        }
    }
}
