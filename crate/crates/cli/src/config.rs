//! Flat settings file with environment overrides.
//!
//! Precedence, lowest first: built-in defaults, the TOML file given with
//! `--config`, `A11Y_<KEY>` environment variables, then command-line flags.
//! The API key is never read from the file.

use std::path::{Path, PathBuf};

use a11y_core::rules::{RuleConfig, Ruleset};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub ruleset: Ruleset,
    pub optimize_ruleset: Ruleset,
    pub eval_ruleset: Ruleset,
    pub backend: String,
    pub generator_backend: Option<String>,
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
    pub transcript: Option<PathBuf>,
    pub max_rounds: usize,
    pub jobs: usize,
    pub seed: u64,
    pub confidence: f64,
    pub margin: f64,
    pub list_link_threshold: usize,
    pub manifest_dir: PathBuf,
}

impl Default for Settings {
    fn default() -> Self {
        let live = a11y_refine::gateway::LiveConfig::default();
        Self {
            ruleset: Ruleset::A,
            optimize_ruleset: Ruleset::Q,
            eval_ruleset: Ruleset::A,
            backend: "oracle".into(),
            generator_backend: None,
            endpoint: live.endpoint,
            model: live.model,
            temperature: live.temperature,
            max_retries: live.max_retries,
            max_in_flight: live.max_in_flight,
            timeout_secs: live.timeout_secs,
            transcript: None,
            max_rounds: a11y_refine::session::DEFAULT_MAX_ROUNDS,
            jobs: 0,
            seed: 0,
            confidence: 0.90,
            margin: 0.10,
            list_link_threshold: RuleConfig::default().list_link_threshold,
            manifest_dir: PathBuf::from(".a11y/manifests"),
        }
    }
}

const KEYS: &[&str] = &[
    "ruleset",
    "optimize_ruleset",
    "eval_ruleset",
    "backend",
    "generator_backend",
    "endpoint",
    "model",
    "temperature",
    "max_retries",
    "max_in_flight",
    "timeout_secs",
    "transcript",
    "max_rounds",
    "jobs",
    "seed",
    "confidence",
    "margin",
    "list_link_threshold",
    "manifest_dir",
];

impl Settings {
    pub fn load(file: Option<&Path>) -> Result<Self> {
        let mut table = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                let table: toml::Table = toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?;
                if table.keys().any(|k| k.eq_ignore_ascii_case("api_key")) {
                    bail!("config {} contains an API key; set A11Y_API_KEY in the environment instead", p.display());
                }
                table
            }
            None => toml::Table::new(),
        };
        for key in KEYS {
            let var = format!("A11Y_{}", key.to_ascii_uppercase());
            if let Ok(raw) = std::env::var(&var) {
                table.insert(key.to_string(), env_value(&raw));
            }
        }
        let settings: Settings = toml::Value::Table(table)
            .try_into()
            .context("invalid settings (check the config file and A11Y_* variables)")?;
        settings.validate()?;
        Ok(settings)
    }

    fn validate(&self) -> Result<()> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            bail!("temperature must be non-negative");
        }
        if !(0.0 < self.confidence && self.confidence < 1.0) || !(0.0 < self.margin && self.margin < 1.0) {
            bail!("confidence and margin must lie strictly between 0 and 1");
        }
        Ok(())
    }

    pub fn rule_config(&self) -> RuleConfig {
        RuleConfig { list_link_threshold: self.list_link_threshold, ..RuleConfig::default() }
    }

    pub fn live_config(&self) -> a11y_refine::gateway::LiveConfig {
        a11y_refine::gateway::LiveConfig {
            endpoint: self.endpoint.clone(),
            model: self.model.clone(),
            temperature: self.temperature,
            max_retries: self.max_retries,
            max_in_flight: self.max_in_flight,
            timeout_secs: self.timeout_secs,
        }
    }
}

/// Environment values are strings; numbers and booleans are recognised so
/// they deserialize into typed fields.
fn env_value(raw: &str) -> toml::Value {
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    toml::Value::String(raw.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_load() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a11y.toml");
        std::fs::write(&p, "backend = \"replay\"\nmax_rounds = 2\nconfidence = 0.95\neval_ruleset = \"Q\"\n").unwrap();
        let s = Settings::load(Some(&p)).unwrap();
        assert_eq!(s.backend, "replay");
        assert_eq!(s.max_rounds, 2);
        assert_eq!(s.eval_ruleset, Ruleset::Q);
    }

    #[test]
    fn key_in_file_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a11y.toml");
        std::fs::write(&p, "api_key = \"sk\"\n").unwrap();
        assert!(Settings::load(Some(&p)).is_err());
    }

    #[test]
    fn env_values_are_typed() {
        assert_eq!(env_value("3"), toml::Value::Integer(3));
        assert_eq!(env_value("0.5"), toml::Value::Float(0.5));
        assert_eq!(env_value("A"), toml::Value::String("A".into()));
    }
}
