//! Deterministic rewriter that fixes a small set of rules without a model.
//!
//! Used as the optimizer in offline runs. It re-evaluates the code first and
//! only acts on findings that are still present, so applying it twice is the
//! same as applying it once. Edits are confined to the segment blocks that
//! contain the input findings.

use std::collections::BTreeSet;

use a11y_core::color::{contrast_ratio, Rgba};
use a11y_core::rules::names::{collapse, plain_text};
use a11y_core::rules::{evaluate_with, lookup, Finding, RuleConfig, Ruleset};
use a11y_core::segment::{block_at, segment};
use a11y_core::style::{split_length, StyleResolver};
use a11y_core::{Document, Element};

use crate::source::load_document;

pub const ORACLE_RULES: &[&str] = &[
    "html_lang_exists",
    "img_alt_valid",
    "a_text_purpose",
    "frame_title_exists",
    "page_title_exists",
    "input_label_exists",
    "text_contrast_sufficient",
    "AltFailure",
    "FontSizeCSS",
    "ImgLinkFail",
    "SubmitBtn",
];

const ROOT_FONT_PX: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Edit {
    start: usize,
    end: usize,
    text: String,
}

impl Edit {
    fn insert(at: usize, text: impl Into<String>) -> Self {
        Self { start: at, end: at, text: text.into() }
    }

    fn replace(start: usize, end: usize, text: impl Into<String>) -> Self {
        Self { start, end, text: text.into() }
    }
}

#[derive(Debug, Clone, Default)]
pub struct OracleRewriter {
    pub config: RuleConfig,
}

impl OracleRewriter {
    pub fn new(config: RuleConfig) -> Self {
        Self { config }
    }

    pub fn supports(rule_id: &str) -> bool {
        ORACLE_RULES.contains(&rule_id)
    }

    pub fn id(&self) -> String {
        "oracle".to_string()
    }

    /// Rewrite `code` to clear the supported findings among `findings`.
    /// Anything unsupported, stale, or outside the findings' blocks is left alone.
    pub fn rewrite(&self, path: &str, code: &[u8], findings: &[Finding]) -> Vec<u8> {
        if !findings.iter().any(|f| Self::supports(&f.rule_id)) {
            return code.to_vec();
        }
        let Ok(doc) = load_document(path, code) else {
            return code.to_vec();
        };
        if doc.encoding.name() != "UTF-8" {
            return code.to_vec();
        }

        let rulesets: BTreeSet<Ruleset> = findings
            .iter()
            .filter(|f| Self::supports(&f.rule_id))
            .filter_map(|f| lookup(&f.rule_id).map(|r| r.ruleset))
            .collect();
        let live: BTreeSet<(String, usize, usize)> = rulesets
            .into_iter()
            .flat_map(|rs| evaluate_with(&doc, rs, &self.config).findings)
            .map(|f| (f.rule_id, f.span.start, f.span.end))
            .collect();

        let blocks = segment(path, code);
        let allowed: BTreeSet<usize> = findings.iter().filter_map(|f| block_at(&blocks, f.span.start)).collect();
        let within = |e: &Edit| {
            allowed.iter().any(|&b| blocks[b].span.start <= e.start && e.end <= blocks[b].span.end)
        };

        let styles = StyleResolver::new(&doc);
        let mut fixer = Fixer { doc: &doc, styles: &styles, path, config: &self.config, frame_titles: None };
        let mut edits = Vec::new();
        let mut seen = BTreeSet::new();
        for f in findings {
            if !Self::supports(&f.rule_id) || !live.contains(&(f.rule_id.clone(), f.span.start, f.span.end)) {
                continue;
            }
            if !seen.insert((f.rule_id.clone(), f.doc_index, f.span)) {
                continue;
            }
            edits.extend(fixer.fix(f).into_iter().filter(|e| within(e)));
        }
        apply(code, edits)
    }
}

/// Apply non-overlapping edits. Conflicting later edits are dropped.
fn apply(source: &[u8], mut edits: Vec<Edit>) -> Vec<u8> {
    edits.sort();
    edits.dedup();
    let mut kept: Vec<Edit> = Vec::new();
    for e in edits {
        if let Some(prev) = kept.last() {
            let overlaps = e.start < prev.end || (e.start == prev.start && prev.start != prev.end);
            if overlaps {
                continue;
            }
        }
        kept.push(e);
    }
    let mut out = source.to_vec();
    for e in kept.iter().rev() {
        out.splice(e.start..e.end, e.text.bytes());
    }
    out
}

struct Fixer<'a> {
    doc: &'a Document,
    styles: &'a StyleResolver<'a>,
    path: &'a str,
    config: &'a RuleConfig,
    frame_titles: Option<BTreeSet<String>>,
}

impl Fixer<'_> {
    fn fix(&mut self, f: &Finding) -> Vec<Edit> {
        let doc = self.doc;
        let Some(el) = doc.get(f.doc_index) else {
            return Vec::new();
        };
        match f.rule_id.as_str() {
            "html_lang_exists" => vec![set_attr(doc, el, "lang", "en")],
            "img_alt_valid" | "AltFailure" => vec![set_attr(doc, el, "alt", &self.alt_text(el))],
            "ImgLinkFail" | "a_text_purpose" => match doc.descendants(f.doc_index).find(|d| d.tag == "img") {
                Some(img) => vec![set_attr(doc, img, "alt", &self.alt_text(img))],
                None => vec![set_attr(doc, el, "aria-label", &link_label(el))],
            },
            "frame_title_exists" => {
                let title = self.frame_title(el);
                vec![set_attr(doc, el, "title", &title)]
            }
            "page_title_exists" => self.page_title(el).into_iter().collect(),
            "input_label_exists" => vec![set_attr(doc, el, "aria-label", &control_label(el))],
            "text_contrast_sufficient" => self.contrast(el).into_iter().collect(),
            "FontSizeCSS" => self.font_size(f).into_iter().collect(),
            "SubmitBtn" => el
                .end_tag
                .map(|end| Edit::insert(end.start, "<button type=\"submit\">Submit</button>"))
                .into_iter()
                .collect(),
            _ => Vec::new(),
        }
    }

    fn alt_text(&self, el: &Element) -> String {
        let src = el.attr("src").unwrap_or("").trim();
        let file = src.split(['?', '#']).next().unwrap_or("").rsplit('/').next().unwrap_or("");
        let stem = file.rsplit_once('.').map(|(s, _)| s).unwrap_or(file);
        let words = humanize(stem);
        let lower = words.to_lowercase();
        let weak = lower.is_empty()
            || lower == stem.to_lowercase()
            || self.config.alt_placeholders.iter().any(|p| p.eq_ignore_ascii_case(&lower));
        if words.is_empty() {
            "Illustration".to_string()
        } else if weak {
            format!("{words} graphic")
        } else {
            words
        }
    }

    fn frame_title(&mut self, el: &Element) -> String {
        let doc = self.doc;
        let taken = self.frame_titles.get_or_insert_with(|| {
            doc.elements()
                .filter(|e| matches!(e.tag.as_str(), "iframe" | "frame"))
                .map(|e| collapse(e.attr("title").unwrap_or("")).to_lowercase())
                .filter(|t| !t.is_empty())
                .collect()
        });
        let current = collapse(el.attr("title").unwrap_or(""));
        let base = if !current.is_empty() {
            current
        } else {
            let src = el.attr("src").unwrap_or("");
            let stem = src.split(['?', '#']).next().unwrap_or("").trim_end_matches('/').rsplit('/').next().unwrap_or("");
            let stem = stem.rsplit_once('.').map(|(s, _)| s).unwrap_or(stem);
            match humanize(stem) {
                w if w.is_empty() => "Embedded content".to_string(),
                w => format!("Embedded {w}"),
            }
        };
        let mut candidate = base.clone();
        let mut n = 2;
        while taken.contains(&candidate.to_lowercase()) {
            candidate = format!("{base} ({n})");
            n += 1;
        }
        taken.insert(candidate.to_lowercase());
        candidate
    }

    fn page_title(&self, html: &Element) -> Option<Edit> {
        let doc = self.doc;
        let text = doc
            .first_by_tag("h1")
            .map(|h| collapse(&plain_text(doc, h.doc_index)))
            .filter(|t| !t.is_empty())
            .unwrap_or_else(|| {
                let stem = std::path::Path::new(self.path)
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                match humanize(&stem) {
                    w if w.is_empty() => "Untitled page".to_string(),
                    w => w,
                }
            });
        let text = html_escape::encode_text(&text).into_owned();
        let existing = doc
            .elements_by_tag("title")
            .find(|t| !doc.has_ancestor(t.doc_index, |a| a.tag == "svg"));
        if let Some(t) = existing {
            let end = t.end_tag?;
            return Some(Edit::replace(t.start_tag.end, end.start, text));
        }
        if let Some(head) = doc.first_by_tag("head") {
            return Some(Edit::insert(head.start_tag.end, format!("<title>{text}</title>")));
        }
        Some(Edit::insert(html.start_tag.end, format!("<head><title>{text}</title></head>")))
    }

    fn contrast(&self, el: &Element) -> Option<Edit> {
        let i = el.doc_index;
        let fg = self.styles.effective_foreground(i)?;
        let bg = self.styles.effective_background(i)?;
        let threshold = self.styles.contrast_threshold(i);
        let fixed = adjust_lightness(fg, bg, threshold);
        let style = self.styles.style(i);
        let bang = |prop: &str| {
            if style.provenance.get(prop).is_some_and(|p| p.important && p.inherited_from.is_none()) {
                " !important"
            } else {
                ""
            }
        };
        let decls = format!(
            "color: {}{}; background-color: {}{}",
            fixed.to_hex(),
            bang("color"),
            bg.to_hex(),
            bang("background-color"),
        );
        Some(append_style(self.doc, el, &decls))
    }

    fn font_size(&self, f: &Finding) -> Option<Edit> {
        let value = f.evidence.get("value")?;
        let (number, unit) = split_length(value)?;
        let px = match unit.as_str() {
            "px" => number,
            "pt" => number * 4.0 / 3.0,
            "in" => number * 96.0,
            "cm" => number * 96.0 / 2.54,
            "mm" => number * 96.0 / 25.4,
            _ => return None,
        };
        let rem = format!("{}rem", trim_float(px / ROOT_FONT_PX));
        let text = match &f.stylesheet {
            // Only a stylesheet file being rewritten on its own has spans into the code.
            Some(sheet) if sheet == self.path => self.doc.stylesheets.iter().find_map(|s| s.text.as_deref())?,
            Some(_) => return None,
            None => self.doc.source.as_str(),
        };
        let decl = f.span.slice(text);
        let colon = decl.find(':')?;
        let at = decl[colon..].find(value.as_str())? + colon;
        Some(Edit::replace(f.span.start + at, f.span.start + at + value.len(), rem))
    }
}

fn trim_float(x: f64) -> String {
    let s = format!("{:.4}", x);
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Split a file stem or identifier into lowercase-ish words.
fn humanize(raw: &str) -> String {
    let mut words = Vec::new();
    let mut cur = String::new();
    let mut prev_lower = false;
    for c in raw.chars() {
        if !c.is_alphanumeric() {
            if !cur.is_empty() {
                words.push(std::mem::take(&mut cur));
            }
            prev_lower = false;
            continue;
        }
        if c.is_uppercase() && prev_lower && !cur.is_empty() {
            words.push(std::mem::take(&mut cur));
        }
        prev_lower = c.is_lowercase() || c.is_ascii_digit();
        cur.extend(c.to_lowercase());
    }
    if !cur.is_empty() {
        words.push(cur);
    }
    let mut s = words.join(" ");
    if let Some(first) = s.get(..1) {
        s = first.to_uppercase() + &s[1..];
    }
    s
}

fn control_label(el: &Element) -> String {
    for attr in ["name", "id", "placeholder"] {
        let words = humanize(el.attr(attr).unwrap_or(""));
        if !words.is_empty() {
            return words;
        }
    }
    match el.tag.as_str() {
        "select" => "Selection".to_string(),
        "textarea" => "Text area".to_string(),
        _ => {
            let ty = el.attr("type").map(|t| t.trim().to_ascii_lowercase()).filter(|t| !t.is_empty());
            humanize(&format!("{} field", ty.as_deref().unwrap_or("text")))
        }
    }
}

/// Name for a link with no text, taken from the last segment of its target.
fn link_label(el: &Element) -> String {
    let href = el.attr("href").unwrap_or("").split(['?', '#']).next().unwrap_or("");
    let last = href.trim_end_matches('/').rsplit('/').next().unwrap_or("");
    let stem = last.rsplit_once('.').map(|(s, _)| s).unwrap_or(last);
    let words = humanize(stem);
    if words.is_empty() {
        "Home".to_string()
    } else {
        words
    }
}

fn quoted(doc: &Document, value_span: a11y_core::SourceSpan) -> bool {
    value_span.start > 0 && matches!(doc.source.as_bytes()[value_span.start - 1], b'"' | b'\'')
}

/// Set an attribute, replacing an existing value or adding the attribute.
fn set_attr(doc: &Document, el: &Element, name: &str, value: &str) -> Edit {
    let escaped = html_escape::encode_quoted_attribute(value);
    match el.attribute(name) {
        Some(a) => match a.value_span {
            Some(vs) if quoted(doc, vs) => Edit::replace(vs.start, vs.end, escaped),
            _ => Edit::replace(a.span.start, a.span.end, format!("{name}=\"{escaped}\"")),
        },
        None => Edit::insert(el.attribute_insert_point(), format!(" {name}=\"{escaped}\"")),
    }
}

/// Append declarations to the element's `style` attribute, creating it when absent.
fn append_style(doc: &Document, el: &Element, decls: &str) -> Edit {
    let Some(attr) = el.attribute("style") else {
        return set_attr(doc, el, "style", decls);
    };
    let old = attr.value.as_deref().unwrap_or("");
    let sep = if old.trim().is_empty() || old.trim_end().ends_with(';') { "" } else { "; " };
    match attr.value_span {
        Some(vs) if quoted(doc, vs) => {
            Edit::insert(vs.end, format!("{sep}{}", html_escape::encode_quoted_attribute(decls)))
        }
        _ => Edit::replace(
            attr.span.start,
            attr.span.end,
            format!("style=\"{}{sep}{}\"", old, html_escape::encode_quoted_attribute(decls)),
        ),
    }
}

/// Move the foreground's HSL lightness toward black or white, whichever
/// contrasts more with `bg`, stopping at the smallest step that meets
/// `threshold`. Hue and saturation are kept.
pub fn adjust_lightness(fg: Rgba, bg: Rgba, threshold: f64) -> Rgba {
    let target = threshold + 0.01;
    if contrast_ratio(fg, bg) >= target {
        return fg;
    }
    let (h, s, l) = fg.to_hsl();
    let dark = Rgba::from_hsl(h, s, 0.0);
    let light = Rgba::from_hsl(h, s, 1.0);
    let end = if contrast_ratio(dark, bg) >= contrast_ratio(light, bg) { 0.0 } else { 1.0 };
    let at = |t: f64| Rgba::from_hsl(h, s, l + (end - l) * t);
    if contrast_ratio(at(1.0), bg) < target {
        return at(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..40 {
        let mid = (lo + hi) / 2.0;
        if contrast_ratio(at(mid), bg) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    at(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use a11y_core::rules::evaluate;

    fn findings(path: &str, code: &str, rs: Ruleset) -> Vec<Finding> {
        let doc = load_document(path, code.as_bytes()).unwrap();
        evaluate(&doc, rs).findings
    }

    fn count(path: &str, code: &[u8], rule: &str, rs: Ruleset) -> usize {
        findings(path, std::str::from_utf8(code).unwrap(), rs).iter().filter(|f| f.rule_id == rule).count()
    }

    fn fix(path: &str, code: &str, rs: Ruleset) -> Vec<u8> {
        OracleRewriter::default().rewrite(path, code.as_bytes(), &findings(path, code, rs))
    }

    #[test]
    fn lang_is_inserted() {
        let out = fix("p.html", "<html><head><title>x</title></head><body></body></html>", Ruleset::A);
        assert!(String::from_utf8_lossy(&out).starts_with("<html lang=\"en\">"));
        assert_eq!(count("p.html", &out, "html_lang_exists", Ruleset::A), 0);
    }

    #[test]
    fn image_links_and_filename_alts() {
        let code = "<html lang=en><body><a href=\"/cart\"><img src=\"cart-icon.svg\"></a><a href=\"/faq/\"></a><img src=\"team.jpg\" alt=\"team.jpg\"></body></html>";
        let out = fix("p.html", code, Ruleset::Q);
        let s = String::from_utf8_lossy(&out);
        assert!(s.contains("<img alt=\"Cart icon\" src=\"cart-icon.svg\">"), "{s}");
        assert!(s.contains("alt=\"Team graphic\""), "{s}");
        for rule in ["ImgLinkFail", "AltFailure"] {
            assert_eq!(count("p.html", &out, rule, Ruleset::Q), 0, "{rule}: {s}");
        }
    }

    #[test]
    fn alt_and_label_and_title() {
        let code = "<html lang=en><head></head><body><img src=\"img/logo.png\"><form><input name=user_email><button>Go</button></form><iframe src=a.html></iframe></body></html>";
        let out = fix("p.html", code, Ruleset::A);
        let s = String::from_utf8_lossy(&out);
        assert!(s.contains("alt=\"Logo graphic\""), "{s}");
        assert!(s.contains("aria-label=\"User email\""), "{s}");
        assert!(s.contains("<title>P</title>"), "{s}");
        for rule in ["img_alt_valid", "input_label_exists", "page_title_exists", "frame_title_exists"] {
            assert_eq!(count("p.html", &out, rule, Ruleset::A), 0, "{rule}: {s}");
        }
    }

    #[test]
    fn contrast_is_raised() {
        let code = "<html lang=en><head><title>t</title></head><body><p style=\"color:#aaa;background:#fff\">low</p></body></html>";
        assert_eq!(count("p.html", code.as_bytes(), "text_contrast_sufficient", Ruleset::A), 1);
        let out = fix("p.html", code, Ruleset::A);
        assert_eq!(count("p.html", &out, "text_contrast_sufficient", Ruleset::A), 0, "{}", String::from_utf8_lossy(&out));
    }

    #[test]
    fn lightness_search_keeps_hue_and_passes() {
        let fg = Rgba::rgb(0x99, 0xbb, 0xff);
        let out = adjust_lightness(fg, Rgba::rgb(255, 255, 255), 4.5);
        assert!(contrast_ratio(out, Rgba::rgb(255, 255, 255)) >= 4.5);
        assert!(out.b > out.r);
    }

    #[test]
    fn font_size_becomes_rem() {
        let code = "p { font-size: 12px; color: red }\nh1 { font: bold 24pt serif }\n";
        let out = fix("s.css", code, Ruleset::Q);
        let s = String::from_utf8(out.clone()).unwrap();
        assert_eq!(s, "p { font-size: 0.75rem; color: red }\nh1 { font: bold 2rem serif }\n");
        assert_eq!(count("s.css", &out, "FontSizeCSS", Ruleset::Q), 0);
    }

    #[test]
    fn submit_button_added() {
        let code = "<form><input aria-label=q></form>";
        let out = fix("f.html", code, Ruleset::Q);
        assert_eq!(count("f.html", &out, "SubmitBtn", Ruleset::Q), 0);
    }

    #[test]
    fn idempotent_and_noop_without_findings() {
        let code = "<html><body><img src=a.png><p style=\"color:#999\">x</p></body></html>";
        let once = fix("p.html", code, Ruleset::A);
        let fs = findings("p.html", code, Ruleset::A);
        let twice = OracleRewriter::default().rewrite("p.html", &once, &fs);
        assert_eq!(once, twice);
        let clean = "<p>hello</p>";
        assert_eq!(OracleRewriter::default().rewrite("c.html", clean.as_bytes(), &[]), clean.as_bytes());
    }

    #[test]
    fn edits_stay_in_finding_blocks() {
        let code = "<div><img src=a.png></div><div><img src=b.png></div>";
        let fs: Vec<Finding> = findings("p.html", code, Ruleset::A)
            .into_iter()
            .filter(|f| f.rule_id == "img_alt_valid" && f.span.start > 20)
            .collect();
        let out = OracleRewriter::default().rewrite("p.html", code.as_bytes(), &fs);
        assert!(out.starts_with(b"<div><img src=a.png></div>"));
        assert_ne!(out, code.as_bytes());
    }

    #[test]
    fn humanize_words() {
        assert_eq!(humanize("heroBanner_2x"), "Hero banner 2x");
        assert_eq!(humanize("--"), "");
    }
}
