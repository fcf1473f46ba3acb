use std::collections::HashMap;

use super::names::{
    accessible_name, collapse, content_text, input_type, is_data_table, is_labelable_control, is_tabbable,
    label_attributes, labels_for, own_table_descendants, plain_text, role, svg_name, ARIA_ROLES,
};
use super::Ctx;
use crate::color::contrast_ratio;
use crate::dom::Node;

pub(super) fn run(ctx: &mut Ctx) {
    text_contrast_sufficient(ctx);
    svg_graphics_labelled(ctx);
    aria_hidden_nontabbable(ctx);
    img_alt_valid(ctx);
    img_alt_redundant(ctx);
    input_label_exists(ctx);
    label_ref_valid(ctx);
    a_text_purpose(ctx);
    aria_id_unique(ctx);
    aria_complementary_labelled(ctx);
    for (id, r) in LANDMARK_RULES {
        landmark_label_unique(ctx, id, r);
    }
    frame_title_exists(ctx);
    table_headers_exists(ctx);
    single_landmark(ctx, "aria_banner_single", "banner");
    single_landmark(ctx, "aria_contentinfo_single", "contentinfo");
    html_lang_exists(ctx);
    label_position(ctx, "input_label_after");
    label_content_exists(ctx);
    table_scope_valid(ctx);
    aria_role_valid(ctx);
    page_title_exists(ctx);
    skip_main_exists(ctx);
}

const LANDMARK_RULES: [(&str, &str); 6] = [
    ("aria_navigation_label_unique", "navigation"),
    ("aria_banner_label_unique", "banner"),
    ("aria_complementary_label_unique", "complementary"),
    ("aria_contentinfo_label_unique", "contentinfo"),
    ("aria_main_label_unique", "main"),
    ("aria_region_label_unique", "region"),
];

const ID_REF_ATTRIBUTES: &[&str] = &[
    "aria-labelledby",
    "aria-describedby",
    "aria-controls",
    "aria-owns",
    "aria-activedescendant",
    "aria-flowto",
    "aria-details",
    "aria-errormessage",
];

fn text_contrast_sufficient(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for el in doc.elements() {
        let i = el.doc_index;
        if !doc.has_direct_text(i) || !ctx.styles.is_visible(i) {
            continue;
        }
        let (Some(fg), Some(bg)) = (ctx.styles.effective_foreground(i), ctx.styles.effective_background(i)) else {
            continue;
        };
        ctx.applies("text_contrast_sufficient", i);
        let ratio = contrast_ratio(fg, bg);
        let threshold = ctx.styles.contrast_threshold(i);
        if ratio < threshold {
            ctx.fail(
                "text_contrast_sufficient",
                i,
                format!("Text contrast {ratio:.2}:1 is below the required {threshold}:1"),
                &[
                    ("contrast", format!("{ratio:.2}")),
                    ("threshold", format!("{threshold}")),
                    ("foreground", fg.to_hex()),
                    ("background", bg.to_hex()),
                    ("large_text", ctx.styles.is_large_text(i).to_string()),
                ],
            );
        }
    }
}

fn svg_graphics_labelled(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for el in doc.elements_by_tag("svg") {
        let i = el.doc_index;
        let decorative = matches!(role(doc, i).as_deref(), Some("presentation") | Some("none"));
        if decorative || !ctx.styles.is_visible(i) {
            continue;
        }
        ctx.applies("svg_graphics_labelled", i);
        if svg_name(doc, &ctx.styles, i).is_empty() {
            ctx.fail("svg_graphics_labelled", i, "SVG graphic has no accessible name", &[]);
        }
    }
}

fn aria_hidden_nontabbable(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for el in doc.elements() {
        if !el.attr("aria-hidden").is_some_and(|v| v.trim().eq_ignore_ascii_case("true")) {
            continue;
        }
        let i = el.doc_index;
        ctx.applies("aria_hidden_nontabbable", i);
        let focusable = std::iter::once(el)
            .chain(doc.descendants(i))
            .find(|d| is_tabbable(doc, d.doc_index));
        if let Some(f) = focusable {
            ctx.fail(
                "aria_hidden_nontabbable",
                i,
                "Element hidden with aria-hidden contains a tabbable element",
                &[("tabbable", doc.path(f.doc_index))],
            );
        }
    }
}

fn img_alt_valid(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for el in doc.elements_by_tag("img") {
        let i = el.doc_index;
        if el.attr("aria-hidden").is_some_and(|v| v.trim().eq_ignore_ascii_case("true")) {
            continue;
        }
        ctx.applies("img_alt_valid", i);
        let presentational = matches!(role(doc, i).as_deref(), Some("presentation") | Some("none"));
        let titled = el.attr("title").is_some_and(|t| !t.trim().is_empty());
        if !el.has_attr("alt") && !presentational && !titled && label_attributes(doc, &ctx.styles, i).is_none() {
            ctx.fail("img_alt_valid", i, "Image has no alt attribute or other accessible name", &[
                ("src", el.attr("src").unwrap_or("").to_string()),
            ]);
        }
    }
}

fn normalize(s: &str) -> String {
    collapse(s).to_lowercase()
}

fn img_alt_redundant(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for el in doc.elements_by_tag("img") {
        let i = el.doc_index;
        let Some(alt) = el.attr("alt").map(normalize).filter(|a| !a.is_empty()) else {
            continue;
        };
        let Some(link) = doc.ancestors(i).find(|a| a.tag == "a") else {
            continue;
        };
        ctx.applies("img_alt_redundant", i);
        let own = normalize(&plain_text(doc, link.doc_index));
        let mut neighbours = Vec::new();
        if let Some(p) = link.parent {
            let sibs: Vec<usize> = doc.child_elements(p).map(|s| s.doc_index).collect();
            if let Some(pos) = sibs.iter().position(|&s| s == link.doc_index) {
                for n in [pos.checked_sub(1), Some(pos + 1)].into_iter().flatten() {
                    if let Some(&s) = sibs.get(n).filter(|&&s| doc.element(s).tag == "a") {
                        neighbours.push(normalize(&plain_text(doc, s)));
                    }
                }
            }
        }
        if alt == own || neighbours.contains(&alt) {
            ctx.fail("img_alt_redundant", i, "Image alt text repeats the link text", &[("alt", alt)]);
        }
    }
}

fn has_label(ctx: &Ctx, i: usize) -> bool {
    let doc = ctx.doc;
    if label_attributes(doc, &ctx.styles, i).is_some()
        || doc.element(i).attr("title").is_some_and(|t| !t.trim().is_empty())
    {
        return true;
    }
    labels_for(doc, i).into_iter().any(|l| !content_text(doc, &ctx.styles, l).is_empty() || label_attributes(doc, &ctx.styles, l).is_some())
}

fn input_label_exists(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for el in doc.elements() {
        let i = el.doc_index;
        if !is_labelable_control(doc, i) {
            continue;
        }
        ctx.applies("input_label_exists", i);
        if !has_label(ctx, i) {
            ctx.fail("input_label_exists", i, "Form control has no associated label", &[("control", el.tag.clone())]);
        }
    }
}

fn label_ref_valid(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for el in doc.elements_by_tag("label") {
        let Some(target) = el.attr("for") else {
            continue;
        };
        let i = el.doc_index;
        ctx.applies("label_ref_valid", i);
        let matches = doc.elements_with_id(target.trim());
        let problem = if target.trim().is_empty() {
            Some("empty")
        } else if matches.is_empty() {
            Some("no element with this id")
        } else if matches.len() > 1 {
            Some("id is not unique")
        } else if !matches!(
            doc.element(matches[0]).tag.as_str(),
            "input" | "select" | "textarea" | "button" | "meter" | "output" | "progress"
        ) {
            Some("target is not a form control")
        } else {
            None
        };
        if let Some(p) = problem {
            ctx.fail("label_ref_valid", i, format!("Label 'for' reference is invalid: {p}"), &[
                ("for", target.to_string()),
            ]);
        }
    }
}

fn a_text_purpose(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for el in doc.elements_by_tag("a") {
        let i = el.doc_index;
        if !el.has_attr("href") || !ctx.styles.is_visible(i) {
            continue;
        }
        ctx.applies("a_text_purpose", i);
        if accessible_name(doc, &ctx.styles, i).is_empty() {
            ctx.fail("a_text_purpose", i, "Link has no accessible name", &[(
                "href",
                el.attr("href").unwrap_or("").to_string(),
            )]);
        }
    }
}

fn aria_id_unique(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for el in doc.elements() {
        let i = el.doc_index;
        let refs: Vec<(&str, &str)> = ID_REF_ATTRIBUTES
            .iter()
            .filter_map(|a| el.attr(a).map(|v| (*a, v)))
            .collect();
        if refs.is_empty() {
            continue;
        }
        ctx.applies("aria_id_unique", i);
        for (attr, value) in refs {
            let ids: Vec<&str> = value.split_whitespace().collect();
            let problem = if ids.is_empty() {
                Some(("", "empty reference"))
            } else {
                ids.iter().find_map(|id| match doc.elements_with_id(id) {
                    [] => Some((*id, "no element with this id")),
                    [one] if !ctx.styles.is_visible(*one) => Some((*id, "referenced element is hidden")),
                    [_] => None,
                    _ => Some((*id, "id is not unique")),
                })
            };
            if let Some((id, why)) = problem {
                ctx.fail("aria_id_unique", i, format!("{attr} reference {id:?}: {why}"), &[
                    ("attribute", attr.to_string()),
                    ("id", id.to_string()),
                    ("visibility", "static approximation".to_string()),
                ]);
            }
        }
    }
}

fn landmark_label(ctx: &Ctx, i: usize) -> Option<String> {
    label_attributes(ctx.doc, &ctx.styles, i).or_else(|| {
        ctx.doc
            .element(i)
            .attr("title")
            .map(collapse)
            .filter(|t| !t.is_empty())
    })
}

fn aria_complementary_labelled(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for el in doc.elements() {
        let i = el.doc_index;
        if role(doc, i).as_deref() != Some("complementary") {
            continue;
        }
        ctx.applies("aria_complementary_labelled", i);
        if landmark_label(ctx, i).is_none() {
            ctx.fail("aria_complementary_labelled", i, "Complementary landmark has no label", &[]);
        }
    }
}

fn landmark_label_unique(ctx: &mut Ctx, id: &'static str, wanted: &str) {
    let doc = ctx.doc;
    let landmarks: Vec<usize> = doc
        .elements()
        .map(|e| e.doc_index)
        .filter(|&i| role(doc, i).as_deref() == Some(wanted))
        .collect();
    if landmarks.len() < 2 {
        return;
    }
    let labels: Vec<Option<String>> = landmarks.iter().map(|&i| landmark_label(ctx, i).map(|l| l.to_lowercase())).collect();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for l in labels.iter().flatten() {
        *counts.entry(l.as_str()).or_default() += 1;
    }
    for (&i, label) in landmarks.iter().zip(&labels) {
        ctx.applies(id, i);
        match label {
            None => ctx.fail(id, i, format!("One of several {wanted} landmarks has no label"), &[("role", wanted.to_string())]),
            Some(l) if counts[l.as_str()] > 1 => ctx.fail(
                id,
                i,
                format!("Label {l:?} is shared by several {wanted} landmarks"),
                &[("role", wanted.to_string()), ("label", l.clone())],
            ),
            Some(_) => {}
        }
    }
}

fn frame_title_exists(ctx: &mut Ctx) {
    let doc = ctx.doc;
    let frames: Vec<usize> = doc
        .elements()
        .filter(|e| matches!(e.tag.as_str(), "iframe" | "frame"))
        .map(|e| e.doc_index)
        .collect();
    let titles: Vec<String> = frames
        .iter()
        .map(|&i| collapse(doc.element(i).attr("title").unwrap_or("")).to_lowercase())
        .collect();
    for (&i, t) in frames.iter().zip(&titles) {
        ctx.applies("frame_title_exists", i);
        if t.is_empty() {
            ctx.fail("frame_title_exists", i, "Frame has no title", &[]);
        } else if titles.iter().filter(|o| *o == t).count() > 1 {
            ctx.fail("frame_title_exists", i, "Frame title is not unique", &[("title", t.clone())]);
        }
    }
}

fn table_headers_exists(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for el in doc.elements_by_tag("table") {
        let i = el.doc_index;
        if !is_data_table(doc, i) {
            continue;
        }
        ctx.applies("table_headers_exists", i);
        let has_header = own_table_descendants(doc, i).any(|d| {
            d.tag == "th" || matches!(d.attr("role").map(str::trim), Some("columnheader") | Some("rowheader"))
        });
        if !has_header {
            ctx.fail("table_headers_exists", i, "Data table has no header cells", &[]);
        }
    }
}

fn single_landmark(ctx: &mut Ctx, id: &'static str, wanted: &str) {
    let doc = ctx.doc;
    let found: Vec<usize> = doc
        .elements()
        .map(|e| e.doc_index)
        .filter(|&i| role(doc, i).as_deref() == Some(wanted))
        .collect();
    for (n, &i) in found.iter().enumerate() {
        ctx.applies(id, i);
        if n > 0 {
            ctx.fail(id, i, format!("More than one {wanted} landmark on the page"), &[("count", found.len().to_string())]);
        }
    }
}

fn html_lang_exists(ctx: &mut Ctx) {
    let doc = ctx.doc;
    let Some(html) = doc.first_by_tag("html") else {
        return;
    };
    let i = html.doc_index;
    ctx.applies("html_lang_exists", i);
    let lang = html.attr("lang").or_else(|| html.attr("xml:lang")).unwrap_or("").trim();
    if lang.is_empty() {
        ctx.fail("html_lang_exists", i, "The html element has no lang attribute", &[]);
    }
}

/// Shared by the label-position rules of both catalogs.
pub(super) fn label_position(ctx: &mut Ctx, id: &'static str) {
    let doc = ctx.doc;
    for el in doc.elements_by_tag("input") {
        let i = el.doc_index;
        if !is_labelable_control(doc, i) {
            continue;
        }
        let labels = labels_for(doc, i);
        let Some(&label) = labels.first() else {
            continue;
        };
        ctx.applies(id, i);
        let after = matches!(input_type(doc, i).as_str(), "checkbox" | "radio");
        let (before_text, after_text) = label_text_around(ctx, label, i);
        let misplaced = if after {
            before_text && !after_text
        } else {
            after_text && !before_text
        };
        if misplaced {
            let expected = if after { "after" } else { "before" };
            ctx.fail(id, i, format!("Label should be placed {expected} this control"), &[
                ("type", input_type(doc, i)),
                ("label", doc.path(label)),
            ]);
        }
    }
}

/// Whether label text lies before and/or after the control in source order.
fn label_text_around(ctx: &Ctx, label: usize, control: usize) -> (bool, bool) {
    let doc = ctx.doc;
    let c = doc.element(control).span;
    if doc.is_descendant(control, label) {
        let mut before = false;
        let mut after = false;
        collect_text_sides(ctx, label, c.start, &mut before, &mut after);
        return (before, after);
    }
    let l = doc.element(label).span;
    (l.end <= c.start, l.start >= c.end)
}

fn collect_text_sides(ctx: &Ctx, idx: usize, pivot: usize, before: &mut bool, after: &mut bool) {
    let doc = ctx.doc;
    for child in &doc.element(idx).children {
        match child {
            Node::Text(s) if !doc.text(*s).trim().is_empty() => {
                if s.end <= pivot {
                    *before = true;
                } else {
                    *after = true;
                }
            }
            Node::Element(e) => collect_text_sides(ctx, *e, pivot, before, after),
            _ => {}
        }
    }
}

fn label_content_exists(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for el in doc.elements_by_tag("label") {
        let i = el.doc_index;
        ctx.applies("label_content_exists", i);
        if accessible_name(doc, &ctx.styles, i).is_empty() {
            ctx.fail("label_content_exists", i, "Label has no text content", &[]);
        }
    }
}

fn table_scope_valid(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for el in doc.elements() {
        let Some(scope) = el.attr("scope") else {
            continue;
        };
        if !matches!(el.tag.as_str(), "th" | "td") {
            continue;
        }
        let i = el.doc_index;
        ctx.applies("table_scope_valid", i);
        let value = scope.trim().to_ascii_lowercase();
        if el.tag != "th" {
            ctx.fail("table_scope_valid", i, "scope is only valid on th cells", &[("scope", value)]);
        } else if !matches!(value.as_str(), "row" | "col" | "rowgroup" | "colgroup") {
            ctx.fail("table_scope_valid", i, format!("Invalid scope value {value:?}"), &[("scope", value)]);
        }
    }
}

fn aria_role_valid(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for el in doc.elements() {
        let Some(r) = el.attr("role") else {
            continue;
        };
        let i = el.doc_index;
        ctx.applies("aria_role_valid", i);
        let valid = r
            .split_whitespace()
            .any(|t| ARIA_ROLES.binary_search(&t.to_ascii_lowercase().as_str()).is_ok());
        if !valid {
            ctx.fail("aria_role_valid", i, format!("Role {r:?} is not a WAI-ARIA role"), &[("role", r.to_string())]);
        }
    }
}

fn page_title_exists(ctx: &mut Ctx) {
    let doc = ctx.doc;
    let Some(html) = doc.first_by_tag("html") else {
        return;
    };
    let i = html.doc_index;
    ctx.applies("page_title_exists", i);
    let titled = doc
        .elements_by_tag("title")
        .filter(|t| !doc.has_ancestor(t.doc_index, |a| a.tag == "svg"))
        .any(|t| !doc.raw_text(t.doc_index).trim().is_empty());
    if !titled {
        ctx.fail("page_title_exists", i, "The page has no non-empty title element", &[]);
    }
}

fn skip_main_exists(ctx: &mut Ctx) {
    let doc = ctx.doc;
    let Some(html) = doc.first_by_tag("html") else {
        return;
    };
    let i = html.doc_index;
    ctx.applies("skip_main_exists", i);
    let has_main = doc.elements().any(|e| role(doc, e.doc_index).as_deref() == Some("main"));
    let skip_link = doc
        .elements_by_tag("a")
        .find(|a| is_tabbable(doc, a.doc_index))
        .and_then(|a| a.attr("href"))
        .and_then(|h| h.strip_prefix('#'))
        .is_some_and(|id| !id.is_empty() && doc.element_by_id(id).is_some());
    if !has_main && !skip_link {
        ctx.fail("skip_main_exists", i, "No main landmark and no skip link to the main content", &[]);
    }
}
