//! Inaccessibility rate: elements with at least one counted finding divided
//! by elements at least one rule applied to.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::rules::AccessibilityReport;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleCount {
    pub violating: usize,
    pub applicable: usize,
}

impl RuleCount {
    pub fn rate(&self) -> Option<f64> {
        (self.applicable > 0).then(|| self.violating as f64 / self.applicable as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub numerator: usize,
    pub denominator: usize,
    /// `None` when nothing was applicable.
    pub rate: Option<f64>,
    pub per_rule: BTreeMap<String, RuleCount>,
}

impl RateSummary {
    pub fn from_counts(numerator: usize, denominator: usize, per_rule: BTreeMap<String, RuleCount>) -> Self {
        Self {
            numerator,
            denominator,
            rate: (denominator > 0).then(|| numerator as f64 / denominator as f64),
            per_rule,
        }
    }

    pub fn is_undefined(&self) -> bool {
        self.rate.is_none()
    }
}

pub fn rate(report: &AccessibilityReport) -> RateSummary {
    let applicable: BTreeSet<usize> = report.census.values().flatten().copied().collect();
    let violating: BTreeSet<usize> = report
        .counted()
        .map(|f| f.doc_index)
        .filter(|i| applicable.contains(i))
        .collect();
    let per_rule = report
        .census
        .iter()
        .map(|(rule, set)| {
            let v: BTreeSet<usize> = report
                .counted()
                .filter(|f| &f.rule_id == rule && set.contains(&f.doc_index))
                .map(|f| f.doc_index)
                .collect();
            (
                rule.clone(),
                RuleCount {
                    violating: v.len(),
                    applicable: set.len(),
                },
            )
        })
        .collect();
    RateSummary::from_counts(violating.len(), applicable.len(), per_rule)
}

/// Unweighted mean of the defined rates.
pub fn mean(rates: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = rates.into_iter().flatten().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Mean over per-page summaries; pages with no applicable element are skipped.
pub fn aggregate(pages: &[RateSummary]) -> Option<f64> {
    mean(pages.iter().map(|p| p.rate))
}

/// Mean of project means.
pub fn aggregate_projects(projects: &[Vec<RateSummary>]) -> Option<f64> {
    mean(projects.iter().map(|p| aggregate(p)))
}

/// Sum numerators and denominators instead of averaging page rates.
pub fn pooled(pages: &[RateSummary]) -> RateSummary {
    let mut per_rule: BTreeMap<String, RuleCount> = BTreeMap::new();
    for p in pages {
        for (rule, c) in &p.per_rule {
            let e = per_rule.entry(rule.clone()).or_default();
            e.violating += c.violating;
            e.applicable += c.applicable;
        }
    }
    RateSummary::from_counts(
        pages.iter().map(|p| p.numerator).sum(),
        pages.iter().map(|p| p.denominator).sum(),
        per_rule,
    )
}

/// Signed percentage change against a baseline; `None` for a zero baseline.
pub fn percent_change(candidate: f64, baseline: f64) -> Option<f64> {
    (baseline != 0.0).then(|| (candidate - baseline) / baseline * 100.0)
}
