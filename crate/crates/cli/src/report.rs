//! JSON run report.

use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use domtest_core::{RunConfig, TestResult};

/// Everything needed to reproduce and audit a run. Serialized as snake_case
/// JSON; numbers round-trip exactly. Readers should ignore unknown fields so
/// minor-version additions stay compatible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    /// SHA-256 over the raw bytes of the input file(s), in argument order.
    pub input_digest: String,
    pub label_a: String,
    pub label_b: String,
    pub n_a: usize,
    pub n_b: usize,
    pub config: RunConfig,
    pub results: Vec<TestResult>,
    /// Wall-clock seconds; the only field allowed to differ between
    /// otherwise identical runs.
    pub timing_seconds: f64,
}

impl Report {
    pub fn to_json(&self) -> anyhow::Result<String> {
        let mut s = serde_json::to_string_pretty(self).context("serializing report")?;
        s.push('\n');
        Ok(s)
    }
}

/// `sha256:<hex>` over the concatenated raw bytes of the given files.
pub fn input_digest(paths: &[&Path]) -> anyhow::Result<String> {
    let mut hasher = Sha256::new();
    for path in paths {
        let bytes =
            std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        hasher.update(&bytes);
    }
    let digest = hasher.finalize();
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(format!("sha256:{hex}"))
}
