use a11y_core::rules::{Finding, RuleConfig, Ruleset};
use a11y_core::segment::{block_at, segment};
use a11y_refine::prompts::{join_sections, react_sections, PromptOptions, ReactContext, Section};
use a11y_refine::source::evaluate_source;

const PAGE: &str = "<html><body><div><img src=\"logo.png\"><iframe src=\"map.html\"></iframe></div></body></html>";

fn fixture() -> (a11y_core::segment::CodeBlock, Vec<Finding>) {
    let blocks = segment("p.html", PAGE.as_bytes());
    let report = evaluate_source("p.html", PAGE.as_bytes(), Ruleset::A, &RuleConfig::default()).unwrap();
    let target = block_at(&blocks, PAGE.find("<img").unwrap()).unwrap();
    let findings = report.counted().filter(|f| block_at(&blocks, f.span.start) == Some(target)).cloned().collect();
    (blocks[target].clone(), findings)
}

type Flag = fn(&mut PromptOptions);

const FLAGS: [(Section, Flag); 5] = [
    (Section::Instructions, |o| o.accessibility_instructions = false),
    (Section::Guidelines, |o| o.guideline_descriptions = false),
    (Section::Examples, |o| o.code_examples = false),
    (Section::TestRules, |o| o.testing_rules = false),
    (Section::Styles, |o| o.style_properties = false),
];

#[test]
fn each_flag_removes_only_its_section() {
    let (block, findings) = fixture();
    assert!(!findings.is_empty());
    let ctx = |options| ReactContext { summary: Some("A landing page"), block: &block, findings: &findings, styles: "[]", options };
    let full = react_sections(&ctx(PromptOptions::default())).unwrap();
    assert_eq!(full.len(), 10);
    for (section, clear) in FLAGS {
        let mut options = PromptOptions::default();
        clear(&mut options);
        let reduced = react_sections(&ctx(options)).unwrap();
        let expected: Vec<_> = full.iter().filter(|(s, _)| *s != section).cloned().collect();
        assert_eq!(reduced, expected, "{section:?}");
        assert_eq!(join_sections(&reduced), join_sections(&expected));
        let removed = &full.iter().find(|(s, _)| *s == section).unwrap().1;
        assert!(!join_sections(&reduced).contains(removed.as_str()), "{section:?}");
    }
}

#[test]
fn all_flags_off_leaves_the_core_prompt() {
    let (block, findings) = fixture();
    let ctx = ReactContext { summary: None, block: &block, findings: &findings, styles: "[]", options: PromptOptions::none() };
    let kept: Vec<Section> = react_sections(&ctx).unwrap().into_iter().map(|(s, _)| s).collect();
    assert_eq!(kept, vec![Section::Persona, Section::Code, Section::Report, Section::Scaffold]);
}

#[test]
fn findings_outside_the_block_are_refused() {
    let (block, mut findings) = fixture();
    findings[0].span = a11y_core::SourceSpan::new(block.span.end + 1, block.span.end + 2);
    let ctx = ReactContext { summary: None, block: &block, findings: &findings, styles: "[]", options: PromptOptions::default() };
    assert!(react_sections(&ctx).is_err());
}
