use a11y_core::color::{contrast_ratio, Rgba};
use a11y_core::html::parse_html_str;
use a11y_core::metrics::rate;
use a11y_core::rules::{evaluate, Ruleset};
use a11y_core::segment::{reassemble, segment};
use a11y_core::style::StyleResolver;
use proptest::prelude::*;

fn rgb() -> impl Strategy<Value = Rgba> {
    (any::<u8>(), any::<u8>(), any::<u8>()).prop_map(|(r, g, b)| Rgba::rgb(r, g, b))
}

fn soup() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        Just("<div>".to_string()),
        Just("</div>".to_string()),
        Just("<p class=\"a b\">".to_string()),
        Just("</p>".to_string()),
        Just("<section id=s>".to_string()),
        Just("</section>".to_string()),
        Just("<a href=\"#x\">".to_string()),
        Just("</a>".to_string()),
        Just("<img src=a.png>".to_string()),
        Just("<!-- c -->".to_string()),
        Just("</span>".to_string()),
        Just("<li>".to_string()),
        Just("<table><tr><td>".to_string()),
        Just("<style>p{color:red}</style>".to_string()),
        Just("<script>if (a<b) {}</script>".to_string()),
        Just("<".to_string()),
        "[a-z &;]{0,6}",
    ];
    prop::collection::vec(piece, 0..30).prop_map(|v| v.concat())
}

proptest! {
    #[test]
    fn contrast_is_symmetric_and_bounded(a in rgb(), b in rgb()) {
        let r = contrast_ratio(a, b);
        prop_assert!((1.0..=21.0).contains(&r));
        prop_assert!((r - contrast_ratio(b, a)).abs() < 1e-12);
    }

    #[test]
    fn html_round_trips(src in soup()) {
        prop_assert_eq!(parse_html_str(&src).serialize(), src);
    }

    #[test]
    fn segmentation_covers_html(src in soup()) {
        let blocks = segment("p.html", src.as_bytes());
        prop_assert_eq!(reassemble(&blocks).unwrap(), src.as_bytes());
        for w in blocks.windows(2) {
            prop_assert_eq!(w[0].span.end, w[1].span.start);
        }
    }

    #[test]
    fn segmentation_covers_js(src in "[a-z{}();'\"`/ \n]{0,80}") {
        let src = format!("function f(){{}}{src}class K {{ m() {{}} }}");
        let blocks = segment("p.js", src.as_bytes());
        prop_assert_eq!(reassemble(&blocks).unwrap(), src.as_bytes());
    }

    #[test]
    fn findings_lie_in_census(src in soup()) {
        let doc = parse_html_str(&src);
        for rs in [Ruleset::A, Ruleset::Q] {
            let report = evaluate(&doc, rs);
            for f in &report.findings {
                prop_assert!(report.census[&f.rule_id].contains(&f.doc_index));
            }
            let summary = rate(&report);
            prop_assert!(summary.numerator <= summary.denominator);
        }
    }

    #[test]
    fn provenance_text_contains_value(sel in prop::sample::select(vec!["p", ".a", "#s", "div p", "section"]),
                                      color in prop::sample::select(vec!["red", "#123", "rgb(1,2,3)"])) {
        let src = format!("<style>{sel} {{ color: {color}; font: bold 12px serif }}</style><section id=s><div><p class=a>t</p></div></section>");
        let doc = parse_html_str(&src);
        let styles = StyleResolver::new(&doc);
        for el in doc.elements() {
            for p in styles.style(el.doc_index).provenance.values() {
                let sheet = &doc.stylesheets[p.sheet];
                let text = sheet.text.as_deref().unwrap_or(&doc.source);
                prop_assert!(p.span.slice(text).contains(&p.value));
            }
        }
    }
}
