//! Turning a file's bytes into something the rule engine can evaluate.

use a11y_core::html::{decode, parse_html, parse_html_str};
use a11y_core::rules::{evaluate_with, AccessibilityReport, RuleConfig, Ruleset};
use a11y_core::segment::FileKind;
use a11y_core::{Document, Result};

/// HTML is parsed as a page. A CSS file becomes an empty page with the file
/// attached as a detached stylesheet, so spans in findings index into the
/// file itself. Scripts and unknown files yield an empty page.
pub fn load_document(path: &str, code: &[u8]) -> Result<Document> {
    let mut doc = match FileKind::of(path) {
        FileKind::Html => parse_html(code)?,
        FileKind::Css => {
            let (text, _) = decode(code)?;
            let mut doc = parse_html_str("");
            doc.attach_stylesheet(Some(path.to_string()), text);
            doc
        }
        FileKind::Js | FileKind::Other => parse_html_str(""),
    };
    doc.path = Some(path.into());
    Ok(doc)
}

pub fn evaluate_source(path: &str, code: &[u8], ruleset: Ruleset, config: &RuleConfig) -> Result<AccessibilityReport> {
    let doc = load_document(path, code)?;
    Ok(evaluate_with(&doc, ruleset, config))
}
