use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const TOOL_NAME: &str = "wmbench";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// One result row; values are pre-formatted so non-finite numbers survive JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub id: String,
    pub values: BTreeMap<String, String>,
}

/// Record of a run, written as `manifest.json` in the output directory.
/// Contains no timestamps, so identical runs produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub kind: String,
    /// SHA-256 of the canonical JSON form of the effective config.
    pub config_hash: String,
    pub seed: u64,
    pub stage_seeds: BTreeMap<String, u64>,
    pub status: RunStatus,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    /// Output files relative to the output directory, in write order.
    pub outputs: Vec<String>,
    pub rows: Vec<ManifestRow>,
}

impl RunManifest {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            tool: TOOL_NAME.into(),
            tool_version: TOOL_VERSION.into(),
            kind: cfg.kind.name().into(),
            config_hash: config_hash(cfg),
            seed: cfg.seed,
            stage_seeds: BTreeMap::new(),
            status: RunStatus::Ok,
            failed_stage: None,
            error: None,
            outputs: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.canonical_json().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentKind;

    #[test]
    fn hash_tracks_config() {
        let a = ExperimentConfig::new(ExperimentKind::Embed, "o");
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
        b.seed = 1;
        assert_ne!(config_hash(&a), config_hash(&b));
    }
}
