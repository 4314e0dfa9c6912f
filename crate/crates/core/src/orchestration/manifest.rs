//! The run manifest: what was run, on which inputs, and what went wrong.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backends::ModelId;
use crate::corpus::SplitManifest;
use crate::translation::TranslatorConfig;
use crate::SubtaskId;

pub const TOOL_NAME: &str = "vote-harness";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Load,
    Split,
    Translate,
    Collect,
    Vote,
    Evaluate,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] =
        [Stage::Load, Stage::Split, Stage::Translate, Stage::Collect, Stage::Vote, Stage::Evaluate, Stage::Report];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Load => "load",
            Stage::Split => "split",
            Stage::Translate => "translate",
            Stage::Collect => "collect",
            Stage::Vote => "vote",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarningKind {
    DegeneratePredictor,
    CoverageGap,
    ThresholdInconsistency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestWarning {
    pub kind: WarningKind,
    pub model_id: ModelId,
    pub subtask: SubtaskId,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: StageStatus,
    pub elapsed_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Emitted for every invocation, successful or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub started_at: DateTime<Utc>,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// SHA-256 of the config document.
    pub config_digest: String,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: BTreeMap<String, InputDigest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation: Option<TranslatorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitManifest>,
    pub stages: Vec<StageRecord>,
    pub warnings: Vec<ManifestWarning>,
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(config_digest: String, started_at: DateTime<Utc>) -> Self {
        Self {
            tool: TOOL_NAME.into(),
            tool_version: TOOL_VERSION.into(),
            started_at,
            status: RunStatus::Ok,
            error: None,
            config_digest,
            seeds: BTreeMap::new(),
            inputs: BTreeMap::new(),
            translation: None,
            split: None,
            stages: Vec::new(),
            warnings: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Adds a warning unless an identical one is already recorded.
    pub fn warn(&mut self, warning: ManifestWarning) {
        if !self.warnings.contains(&warning) {
            log::warn!("{}", warning.message);
            self.warnings.push(warning);
        }
    }

    pub fn degenerate_warnings(&self) -> impl Iterator<Item = &ManifestWarning> {
        self.warnings.iter().filter(|w| w.kind == WarningKind::DegeneratePredictor)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let mut file = fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}
