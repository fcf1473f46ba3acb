//! Run manifests: what a command read, how it was configured, and what it wrote.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use a11y_core::metrics::{aggregate, mean, pooled, RateSummary, RuleCount};
use a11y_core::rules::Ruleset;
use a11y_refine::sha256_hex;
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

impl FileHash {
    pub fn of(path: &str, bytes: &[u8]) -> Self {
        Self { path: path.to_string(), sha256: sha256_hex(bytes) }
    }
}

/// One cell of a comparison table: a strategy's rate over one corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRecord {
    pub corpus: String,
    pub strategy: String,
    pub eval_ruleset: Ruleset,
    /// Mean of the per-file rates; `None` when no file had an applicable element.
    pub rate: Option<f64>,
    pub pages: Vec<PageRate>,
    /// Counts pooled over the corpus.
    pub per_rule: BTreeMap<String, RuleCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRate {
    pub file: String,
    pub rate: Option<f64>,
}

impl RateRecord {
    pub fn from_pages(corpus: &str, strategy: &str, eval_ruleset: Ruleset, pages: &[(String, RateSummary)]) -> Self {
        let summaries: Vec<RateSummary> = pages.iter().map(|(_, s)| s.clone()).collect();
        Self {
            corpus: corpus.to_string(),
            strategy: strategy.to_string(),
            eval_ruleset,
            rate: aggregate(&summaries),
            pages: pages.iter().map(|(f, s)| PageRate { file: f.clone(), rate: s.rate }).collect(),
            per_rule: pooled(&summaries).per_rule,
        }
    }

    /// Fold another record for the same corpus and strategy into this one.
    pub fn merge(&mut self, other: &RateRecord) {
        self.pages.extend(other.pages.iter().cloned());
        self.rate = mean(self.pages.iter().map(|p| p.rate));
        for (rule, c) in &other.per_rule {
            let e = self.per_rule.entry(rule.clone()).or_default();
            e.violating += c.violating;
            e.applicable += c.applicable;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timestamps {
    pub started: u64,
    pub finished: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub results: Vec<RateRecord>,
    pub timestamps: Timestamps,
}

/// Seconds since the epoch, or `SOURCE_DATE_EPOCH` when set so that
/// manifests can be made reproducible.
pub fn now() -> u64 {
    if let Some(fixed) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.parse().ok()) {
        return fixed;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, started: u64) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            results: Vec::new(),
            timestamps: Timestamps { started, finished: started },
        }
    }

    /// Identity of the run: everything except the timestamps.
    pub fn fingerprint(&self) -> String {
        let mut inputs = self.inputs.clone();
        inputs.sort_by(|a, b| a.path.cmp(&b.path));
        let key = serde_json::json!([self.command, self.config, inputs]);
        sha256_hex(key.to_string().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}

/// Single point through which a command's output files are written, so
/// every write is recorded in the run manifest.
pub struct Writer {
    outputs: Mutex<Vec<FileHash>>,
}

impl Default for Writer {
    fn default() -> Self {
        Self::new()
    }
}

impl Writer {
    pub fn new() -> Self {
        Self { outputs: Mutex::new(Vec::new()) }
    }

    pub fn write(&self, path: &Path, bytes: &[u8]) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.record(&path.display().to_string(), bytes);
        Ok(())
    }

    /// Record an output that went somewhere other than a file (e.g. stdout).
    pub fn record(&self, label: &str, bytes: &[u8]) {
        self.outputs.lock().unwrap_or_else(|e| e.into_inner()).push(FileHash::of(label, bytes));
    }

    /// Store the manifest under `dir` and return its path.
    pub fn finish(self, mut manifest: RunManifest, dir: &Path) -> Result<PathBuf> {
        let mut outputs = self.outputs.into_inner().unwrap_or_else(|e| e.into_inner());
        outputs.sort_by(|a, b| a.path.cmp(&b.path));
        manifest.outputs = outputs;
        manifest.inputs.sort_by(|a, b| a.path.cmp(&b.path));
        manifest.timestamps.finished = now().max(manifest.timestamps.started);
        let name = format!("{}-{}.json", manifest.command.replace(' ', "-"), &manifest.fingerprint()[..16]);
        let path = dir.join(name);
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
