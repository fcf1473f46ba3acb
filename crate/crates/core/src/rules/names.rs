//! Accessible names, roles and focusability.

use crate::dom::{Document, Node};
use crate::style::StyleResolver;

/// Collapse runs of whitespace and trim.
pub fn collapse(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn clean(text: &str) -> String {
    collapse(&html_escape::decode_html_entities(text))
}

fn nonempty(s: String) -> Option<String> {
    (!s.is_empty()).then_some(s)
}

/// Text of the elements referenced by an `aria-labelledby` value. Dangling
/// ids contribute nothing.
pub fn labelledby_text(doc: &Document, styles: &StyleResolver, value: &str) -> String {
    let parts: Vec<String> = value
        .split_whitespace()
        .filter_map(|id| doc.element_by_id(id))
        .map(|el| {
            el.attr("aria-label")
                .map(clean)
                .and_then(nonempty)
                .unwrap_or_else(|| content_text(doc, styles, el.doc_index))
        })
        .filter(|s| !s.is_empty())
        .collect();
    parts.join(" ")
}

/// Name from author-supplied labelling attributes only.
pub fn label_attributes(doc: &Document, styles: &StyleResolver, idx: usize) -> Option<String> {
    let el = doc.element(idx);
    if let Some(ids) = el.attr("aria-labelledby") {
        if let Some(s) = nonempty(labelledby_text(doc, styles, ids)) {
            return Some(s);
        }
    }
    el.attr("aria-label").map(clean).and_then(nonempty)
}

/// First non-empty of `aria-labelledby`, `aria-label`, `alt` (images),
/// `title` and visible text content.
pub fn accessible_name(doc: &Document, styles: &StyleResolver, idx: usize) -> String {
    let el = doc.element(idx);
    if let Some(s) = label_attributes(doc, styles, idx) {
        return s;
    }
    if el.tag == "svg" {
        return svg_name(doc, styles, idx);
    }
    if matches!(el.tag.as_str(), "img" | "area") || (el.tag == "input" && el.attr("type") == Some("image")) {
        if let Some(s) = el.attr("alt").map(clean).and_then(nonempty) {
            return s;
        }
    }
    if let Some(s) = el.attr("title").map(clean).and_then(nonempty) {
        return s;
    }
    content_text(doc, styles, idx)
}

/// `aria-labelledby`, `aria-label`, a `<title>` child, then `title`.
pub fn svg_name(doc: &Document, styles: &StyleResolver, idx: usize) -> String {
    if let Some(s) = label_attributes(doc, styles, idx) {
        return s;
    }
    if let Some(t) = doc.child_elements(idx).find(|c| c.tag == "title") {
        if let Some(s) = nonempty(clean(&doc.raw_text(t.doc_index))) {
            return s;
        }
    }
    doc.element(idx).attr("title").map(clean).unwrap_or_default()
}

/// Visible text content, with embedded images contributing their names.
pub fn content_text(doc: &Document, styles: &StyleResolver, idx: usize) -> String {
    let mut raw = String::new();
    push_content(doc, styles, idx, &mut raw);
    clean(&raw)
}

fn push_content(doc: &Document, styles: &StyleResolver, idx: usize, out: &mut String) {
    for child in &doc.element(idx).children {
        match child {
            Node::Text(s) => out.push_str(doc.text(*s)),
            Node::Element(c) => {
                let el = doc.element(*c);
                if !styles.is_visible(*c) {
                    continue;
                }
                out.push(' ');
                if let Some(s) = label_attributes(doc, styles, *c) {
                    out.push_str(&s);
                } else if matches!(el.tag.as_str(), "img" | "area") {
                    out.push_str(el.attr("alt").unwrap_or(""));
                } else if el.tag == "svg" {
                    out.push_str(&svg_name(doc, styles, *c));
                } else {
                    push_content(doc, styles, *c, out);
                }
                out.push(' ');
            }
            _ => {}
        }
    }
}

/// Text content ignoring images, used for comparing against alt text.
pub fn plain_text(doc: &Document, idx: usize) -> String {
    clean(&doc.raw_text(idx))
}

/// Explicit role (first token) or the implicit landmark role.
pub fn role(doc: &Document, idx: usize) -> Option<String> {
    let el = doc.element(idx);
    if let Some(r) = el.attr("role").and_then(|r| r.split_whitespace().next()) {
        return Some(r.to_ascii_lowercase());
    }
    let sectioning = |d: &Document| {
        d.has_ancestor(idx, |a| matches!(a.tag.as_str(), "article" | "aside" | "main" | "nav" | "section"))
    };
    let implicit = match el.tag.as_str() {
        "header" if !sectioning(doc) => "banner",
        "footer" if !sectioning(doc) => "contentinfo",
        "nav" => "navigation",
        "main" => "main",
        "aside" => "complementary",
        "section" if el.has_attr("aria-label") || el.has_attr("aria-labelledby") || el.has_attr("title") => "region",
        "form" => "form",
        _ => return None,
    };
    Some(implicit.to_string())
}

pub fn has_role(doc: &Document, idx: usize, wanted: &str) -> bool {
    role(doc, idx).as_deref() == Some(wanted)
}

pub fn is_disabled(doc: &Document, idx: usize) -> bool {
    let el = doc.element(idx);
    matches!(el.tag.as_str(), "button" | "input" | "select" | "textarea" | "fieldset" | "optgroup" | "option")
        && el.has_attr("disabled")
}

/// Reachable with the Tab key: `tabindex >= 0`, or natively focusable and
/// neither disabled nor given a negative `tabindex`.
pub fn is_tabbable(doc: &Document, idx: usize) -> bool {
    let el = doc.element(idx);
    if is_disabled(doc, idx) {
        return false;
    }
    if let Some(t) = el.attr("tabindex").and_then(|t| t.trim().parse::<i64>().ok()) {
        return t >= 0;
    }
    match el.tag.as_str() {
        "a" | "area" => el.has_attr("href"),
        "input" => !el.attr("type").is_some_and(|t| t.eq_ignore_ascii_case("hidden")),
        "button" | "select" | "textarea" | "iframe" | "summary" => true,
        _ => el.attr("contenteditable").is_some_and(|v| v.is_empty() || v.eq_ignore_ascii_case("true")),
    }
}

/// Controls that need a label.
pub fn is_labelable_control(doc: &Document, idx: usize) -> bool {
    let el = doc.element(idx);
    match el.tag.as_str() {
        "select" | "textarea" => true,
        "input" => !matches!(
            input_type(doc, idx).as_str(),
            "hidden" | "submit" | "reset" | "button" | "image"
        ),
        _ => false,
    }
}

/// Lowercased `type` of an input, `text` when absent.
pub fn input_type(doc: &Document, idx: usize) -> String {
    doc.element(idx)
        .attr("type")
        .map(|t| t.trim().to_ascii_lowercase())
        .filter(|t| !t.is_empty())
        .unwrap_or_else(|| "text".to_string())
}

/// The `<label>` elements associated with a control, by `for` or nesting.
pub fn labels_for(doc: &Document, idx: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    if let Some(id) = doc.element(idx).id() {
        out.extend(
            doc.elements_by_tag("label")
                .filter(|l| l.attr("for") == Some(id))
                .map(|l| l.doc_index),
        );
    }
    if let Some(l) = doc.ancestors(idx).find(|a| a.tag == "label") {
        if !out.contains(&l.doc_index) {
            out.push(l.doc_index);
        }
    }
    out
}

/// A table is a data table unless it is marked as layout.
pub fn is_data_table(doc: &Document, idx: usize) -> bool {
    !matches!(
        doc.element(idx).attr("role").map(|r| r.trim().to_ascii_lowercase()).as_deref(),
        Some("presentation") | Some("none")
    )
}

/// Descendants of a table that belong to it rather than to a nested table.
pub fn own_table_descendants(doc: &Document, table: usize) -> impl Iterator<Item = &crate::dom::Element> {
    doc.descendants(table).filter(move |d| {
        doc.ancestors(d.doc_index)
            .find(|a| a.tag == "table")
            .is_some_and(|t| t.doc_index == table)
    })
}

pub const ARIA_ROLES: &[&str] = &[
    "alert", "alertdialog", "application", "article", "banner", "blockquote", "button", "caption", "cell",
    "checkbox", "code", "columnheader", "combobox", "complementary", "contentinfo", "definition", "deletion",
    "dialog", "directory", "document", "emphasis", "feed", "figure", "form", "generic", "grid", "gridcell",
    "group", "heading", "img", "insertion", "link", "list", "listbox", "listitem", "log", "main", "marquee",
    "math", "menu", "menubar", "menuitem", "menuitemcheckbox", "menuitemradio", "meter", "navigation", "none",
    "note", "option", "paragraph", "presentation", "progressbar", "radio", "radiogroup", "region", "row",
    "rowgroup", "rowheader", "scrollbar", "search", "searchbox", "separator", "slider", "spinbutton", "status",
    "strong", "subscript", "superscript", "switch", "tab", "table", "tablist", "tabpanel", "term", "textbox",
    "time", "timer", "toolbar", "tooltip", "tree", "treegrid", "treeitem",
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::html::parse_html_str;

    fn name_of(src: &str, tag: &str) -> String {
        let doc = parse_html_str(src);
        let styles = StyleResolver::new(&doc);
        accessible_name(&doc, &styles, doc.first_by_tag(tag).unwrap().doc_index)
    }

    #[test]
    fn precedence() {
        assert_eq!(name_of(r##"<a href="#"><img alt="Home"></a>"##, "a"), "Home");
        assert_eq!(name_of(r#"<a aria-label="Docs">x</a>"#, "a"), "Docs");
        assert_eq!(name_of(r##"<a href="#"></a>"##, "a"), "");
        assert_eq!(name_of(r#"<span id=l>Go&nbsp;now</span><a aria-labelledby="l missing" aria-label="x">y</a>"#, "a"), "Go now");
        assert_eq!(name_of(r#"<a title="T">  </a>"#, "a"), "T");
        assert_eq!(name_of(r#"<a> A <span style="display:none">hidden</span>  &amp; B</a>"#, "a"), "A & B");
    }

    #[test]
    fn svg_title_child() {
        assert_eq!(name_of("<svg><title>Chart</title></svg>", "svg"), "Chart");
    }

    #[test]
    fn implicit_roles() {
        let doc = parse_html_str("<header id=a></header><article><header id=b></header></article><nav id=n></nav>");
        let id = |s| doc.element_by_id(s).unwrap().doc_index;
        assert_eq!(role(&doc, id("a")).as_deref(), Some("banner"));
        assert_eq!(role(&doc, id("b")), None);
        assert_eq!(role(&doc, id("n")).as_deref(), Some("navigation"));
    }

    #[test]
    fn tabbable() {
        let doc = parse_html_str(r#"<a id=a href=x></a><a id=b></a><button id=c disabled></button><div id=d tabindex=0></div><input id=e tabindex=-1>"#);
        let t = |s| is_tabbable(&doc, doc.element_by_id(s).unwrap().doc_index);
        assert!(t("a") && !t("b") && !t("c") && t("d") && !t("e"));
    }

    #[test]
    fn roles_sorted_for_lookup() {
        assert!(ARIA_ROLES.windows(2).all(|w| w[0] < w[1]));
    }
}
