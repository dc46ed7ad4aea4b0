//! Versioned, deterministic JSON reports.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::auditor::{ConditionReport, HypothesisScan, Verdict};
use crate::grid::GridSpec;

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Lowercase hex SHA-256 of the input bytes.
pub fn input_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub tool_version: String,
    pub input_digest: String,
    pub source: String,
    pub seed: u64,
    pub grid: GridSpec,
    pub samples_per_event: usize,
    pub tol: f64,
    pub conditions: Vec<ConditionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<HypothesisScan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geodesics: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distances: Option<serde_json::Value>,
}

impl ReportFile {
    pub fn any_violated(&self) -> bool {
        self.conditions.iter().any(|c| c.verdict == Verdict::Violated)
    }

    /// Pretty JSON with a trailing newline. Field order is fixed by the
    /// struct layout and maps are ordered, so equal reports give equal bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}
