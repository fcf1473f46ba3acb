use a11y_core::rules::{RuleConfig, Ruleset};
use a11y_core::segment::{block_at, segment};
use a11y_refine::source::evaluate_source;
use a11y_refine::OracleRewriter;
use proptest::prelude::*;

fn piece() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z]{1,8}".prop_map(|n| format!("<div><img src=\"{n}.png\"></div>")),
        "[a-z]{1,8}".prop_map(|n| format!("<section><iframe src=\"{n}.html\"></iframe></section>")),
        "[a-z]{1,8}".prop_map(|n| format!("<div><input type=\"text\" name=\"{n}\"></div>")),
        Just("<div><p style=\"color:#999;background-color:#aaa\">faint</p></div>".to_string()),
        Just("<div><p>plain text</p></div>".to_string()),
        Just("<nav><a href=\"/\">Home</a></nav>".to_string()),
    ]
}

fn page() -> impl Strategy<Value = (bool, Vec<String>)> {
    (any::<bool>(), prop::collection::vec(piece(), 1..6))
}

fn render((lang, parts): &(bool, Vec<String>)) -> String {
    let html = if *lang { "<html lang=\"en\">" } else { "<html>" };
    format!("{html}<head><title>t</title></head><body>\n{}\n</body></html>", parts.join("\n"))
}

fn rewrite_all(code: &[u8]) -> Vec<u8> {
    let report = evaluate_source("p.html", code, Ruleset::A, &RuleConfig::default()).unwrap();
    let findings: Vec<_> = report.counted().cloned().collect();
    OracleRewriter::default().rewrite("p.html", code, &findings)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn second_pass_changes_nothing(p in page()) {
        let once = rewrite_all(render(&p).as_bytes());
        prop_assert_eq!(rewrite_all(&once), once);
    }

    #[test]
    fn supported_findings_are_cleared(p in page()) {
        let fixed = rewrite_all(render(&p).as_bytes());
        let report = evaluate_source("p.html", &fixed, Ruleset::A, &RuleConfig::default()).unwrap();
        let left: Vec<_> = report.counted().filter(|f| OracleRewriter::supports(&f.rule_id)).map(|f| f.rule_id.clone()).collect();
        prop_assert!(left.is_empty(), "{:?}\n{}", left, String::from_utf8_lossy(&fixed));
    }

    #[test]
    fn edits_stay_in_the_findings_block(p in page(), pick in any::<prop::sample::Index>()) {
        let code = render(&p);
        let blocks = segment("p.html", code.as_bytes());
        let report = evaluate_source("p.html", code.as_bytes(), Ruleset::A, &RuleConfig::default()).unwrap();
        let candidates: Vec<_> = report.counted().filter(|f| OracleRewriter::supports(&f.rule_id)).collect();
        prop_assume!(!candidates.is_empty());
        let chosen = candidates[pick.index(candidates.len())];
        let target = block_at(&blocks, chosen.span.start).unwrap();
        let in_block: Vec<_> = report.counted().filter(|f| block_at(&blocks, f.span.start) == Some(target)).cloned().collect();
        let out = OracleRewriter::default().rewrite("p.html", code.as_bytes(), &in_block);
        let span = blocks[target].span;
        let delta = out.len() as isize - code.len() as isize;
        prop_assert_eq!(&out[..span.start], &code.as_bytes()[..span.start]);
        prop_assert_eq!(&out[(span.end as isize + delta) as usize..], &code.as_bytes()[span.end..]);
    }
}
