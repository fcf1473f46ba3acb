use a11y_core::exemplars::{for_ruleset, RAW_EXEMPLARS};
use a11y_core::html::parse_html_str;
use a11y_core::rules::{catalog, evaluate, Ruleset};

#[test]
fn every_catalog_row_has_an_exemplar_pair() {
    for rs in [Ruleset::A, Ruleset::Q] {
        assert_eq!(for_ruleset(rs).len(), catalog(rs).len());
    }
    assert_eq!(RAW_EXEMPLARS.len(), 51);
}

#[test]
fn correct_snippets_pass_and_counter_snippets_fail() {
    let mut failures = Vec::new();
    for rs in [Ruleset::A, Ruleset::Q] {
        for ex in for_ruleset(rs).into_iter().filter(|e| e.verified) {
            let good = evaluate(&parse_html_str(ex.correct), rs).findings_for(ex.rule_id).count();
            let bad = evaluate(&parse_html_str(ex.counter), rs).findings_for(ex.rule_id).count();
            if good != 0 || bad == 0 {
                failures.push(format!("{}: correct={good} counter={bad}", ex.rule_id));
            }
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}
