//! Paired correct/counter snippets for every catalog rule.
//!
//! Snippets of implemented rules are checked by the test suite: the correct
//! snippet yields no finding of its rule and the counter snippet at least
//! one. Snippets of the remaining rules are carried for prompting only.

use crate::rules::{catalog, lookup, Ruleset};

include!(concat!(env!("OUT_DIR"), "/exemplars.rs"));

#[derive(Debug, Clone, Copy)]
pub struct Exemplar {
    pub rule_id: &'static str,
    pub ruleset: Ruleset,
    pub correct: &'static str,
    pub counter: &'static str,
    /// True when the rule is implemented, so the pair is machine-checked.
    pub verified: bool,
}

pub fn get(rule_id: &str) -> Option<Exemplar> {
    let (id, correct, counter) = RAW_EXEMPLARS.iter().find(|(id, _, _)| *id == rule_id)?;
    let info = lookup(id)?;
    Some(Exemplar {
        rule_id: info.id,
        ruleset: info.ruleset,
        correct,
        counter,
        verified: info.implemented,
    })
}

/// Exemplars of a ruleset in catalog order.
pub fn for_ruleset(ruleset: Ruleset) -> Vec<Exemplar> {
    catalog(ruleset).iter().filter_map(|r| get(r.id)).collect()
}
