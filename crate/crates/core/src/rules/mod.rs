//! Static accessibility checks over a parsed document.
//!
//! Two catalogs are provided. Ruleset `A` reports at level `violation`,
//! ruleset `Q` at level `failed`. Besides findings, every evaluation records
//! which elements each rule applied to; the inaccessibility rate needs that
//! census as its denominator.

mod achecker;
pub mod catalog;
pub mod names;
mod qualweb;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dom::Document;
use crate::span::SourceSpan;
use crate::style::StyleResolver;

pub use catalog::{catalog, implemented, lookup, RuleInfo};
pub use names::{accessible_name, is_data_table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ruleset {
    A,
    Q,
}

impl Ruleset {
    pub fn other(self) -> Ruleset {
        match self {
            Ruleset::A => Ruleset::Q,
            Ruleset::Q => Ruleset::A,
        }
    }
}

impl fmt::Display for Ruleset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ruleset::A => "A",
            Ruleset::Q => "Q",
        })
    }
}

impl FromStr for Ruleset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Ruleset::A),
            "Q" => Ok(Ruleset::Q),
            other => Err(format!("unknown ruleset {other:?}, expected A or Q")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    Violation,
    PotentialViolation,
    Recommendation,
    PotentialRecommendation,
    Manual,
    Passed,
    Warning,
    Failed,
    Inapplicable,
}

impl Level {
    /// Only these levels enter the inaccessibility rate.
    pub fn is_counted(self) -> bool {
        matches!(self, Level::Violation | Level::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub rule_id: String,
    pub doc_index: usize,
    pub path: String,
    /// Byte range in the document source, or in `stylesheet` when set.
    pub span: SourceSpan,
    /// Path of the external stylesheet the span refers to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stylesheet: Option<String>,
    pub message: String,
    pub evidence: BTreeMap<String, String>,
    pub level: Level,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessibilityReport {
    pub ruleset: Ruleset,
    pub file: String,
    pub findings: Vec<Finding>,
    /// Rule id → elements the rule applied to.
    pub census: BTreeMap<String, BTreeSet<usize>>,
}

impl AccessibilityReport {
    pub fn counted(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.level.is_counted())
    }

    pub fn findings_for<'a>(&'a self, rule_id: &'a str) -> impl Iterator<Item = &'a Finding> + 'a {
        self.findings.iter().filter(move |f| f.rule_id == rule_id)
    }

    /// `(rule_id, doc_index)` pairs with a counted finding.
    pub fn violation_set(&self) -> BTreeSet<(String, usize)> {
        self.counted().map(|f| (f.rule_id.clone(), f.doc_index)).collect()
    }
}

/// Tunable rule parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    pub list_link_threshold: usize,
    pub alt_placeholders: Vec<String>,
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self {
            list_link_threshold: 5,
            alt_placeholders: ["image", "picture", "photo", "img", "spacer", ""]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

pub(crate) struct Ctx<'d> {
    pub doc: &'d Document,
    pub styles: StyleResolver<'d>,
    pub config: &'d RuleConfig,
    findings: Vec<Finding>,
    census: BTreeMap<String, BTreeSet<usize>>,
    level: Level,
}

impl<'d> Ctx<'d> {
    /// Register a rule so it appears in the census even with no targets.
    pub fn rule(&mut self, id: &'static str) {
        self.census.entry(id.to_string()).or_default();
    }

    pub fn applies(&mut self, id: &'static str, idx: usize) {
        self.census.entry(id.to_string()).or_default().insert(idx);
    }

    pub fn fail(&mut self, id: &'static str, idx: usize, message: impl Into<String>, evidence: &[(&str, String)]) {
        let span = self.doc.element(idx).span;
        self.fail_at(id, idx, span, None, message, evidence);
    }

    pub fn fail_at(
        &mut self,
        id: &'static str,
        idx: usize,
        span: SourceSpan,
        stylesheet: Option<String>,
        message: impl Into<String>,
        evidence: &[(&str, String)],
    ) {
        self.applies(id, idx);
        self.findings.push(Finding {
            rule_id: id.to_string(),
            doc_index: idx,
            path: self.doc.path(idx),
            span,
            stylesheet,
            message: message.into(),
            evidence: evidence.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            level: self.level,
        });
    }
}

pub fn evaluate(doc: &Document, ruleset: Ruleset) -> AccessibilityReport {
    evaluate_with(doc, ruleset, &RuleConfig::default())
}

pub fn evaluate_with(doc: &Document, ruleset: Ruleset, config: &RuleConfig) -> AccessibilityReport {
    let mut ctx = Ctx {
        doc,
        styles: StyleResolver::new(doc),
        config,
        findings: Vec::new(),
        census: BTreeMap::new(),
        level: match ruleset {
            Ruleset::A => Level::Violation,
            Ruleset::Q => Level::Failed,
        },
    };
    for rule in implemented(ruleset) {
        ctx.rule(rule.id);
    }
    match ruleset {
        Ruleset::A => achecker::run(&mut ctx),
        Ruleset::Q => qualweb::run(&mut ctx),
    }
    let mut findings = ctx.findings;
    findings.sort_by(|a, b| (a.doc_index, &a.rule_id, a.span).cmp(&(b.doc_index, &b.rule_id, b.span)));
    findings.dedup();
    AccessibilityReport {
        ruleset,
        file: doc.path.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
        findings,
        census: ctx.census,
    }
}
