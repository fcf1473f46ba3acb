use super::achecker::label_position;
use super::names::{accessible_name, collapse, is_data_table, own_table_descendants, plain_text, role};
use super::Ctx;
use crate::css::{BlockKind, DeclarationBlock};
use crate::dom::{Node, SheetOrigin};
use crate::style::{split_font_shorthand, split_length};

pub(super) fn run(ctx: &mut Ctx) {
    alt_failure(ctx);
    caption_data_tbl(ctx);
    color_contrast_fail(ctx);
    combine_adj(ctx);
    focus_remove_fail(ctx);
    font_size_css(ctx);
    headings_org(ctx);
    id_headers_data_tbl(ctx);
    img_link_fail(ctx);
    label_position(ctx, "LabelPos");
    layout_tbl_fail(ctx);
    link_title_attr(ctx);
    list_link_groups(ctx);
    scope_data_tbl(ctx);
    skip_to_main(ctx);
    submit_btn(ctx);
}

fn alt_failure(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for el in doc.elements_by_tag("img") {
        let i = el.doc_index;
        let src = el.attr("src").unwrap_or("").trim();
        let (Some(alt), false) = (el.attr("alt"), src.is_empty()) else {
            continue;
        };
        if matches!(role(doc, i).as_deref(), Some("presentation") | Some("none"))
            || el.attr("aria-hidden").is_some_and(|v| v.trim().eq_ignore_ascii_case("true"))
        {
            continue;
        }
        ctx.applies("AltFailure", i);
        let alt = collapse(alt).to_lowercase();
        let file = src
            .split(['?', '#'])
            .next()
            .unwrap_or("")
            .rsplit('/')
            .next()
            .unwrap_or("")
            .to_lowercase();
        let stem = file.rsplit_once('.').map(|(s, _)| s.to_string()).unwrap_or_else(|| file.clone());
        let placeholder = ctx.config.alt_placeholders.iter().any(|p| p.eq_ignore_ascii_case(&alt));
        if placeholder || alt == file || alt == stem {
            ctx.fail("AltFailure", i, format!("Alt text {alt:?} is not a text alternative"), &[
                ("alt", alt.clone()),
                ("src", src.to_string()),
            ]);
        }
    }
}

fn caption_data_tbl(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for el in doc.elements_by_tag("table") {
        let i = el.doc_index;
        if !is_data_table(doc, i) {
            continue;
        }
        ctx.applies("CaptionDataTbl", i);
        let captioned = doc
            .child_elements(i)
            .any(|c| c.tag == "caption" && !plain_text(doc, c.doc_index).is_empty());
        if !captioned {
            ctx.fail("CaptionDataTbl", i, "Data table has no caption", &[]);
        }
    }
}

/// Element a declaration block is attributed to, and the stylesheet path
/// when its spans refer to an external file.
fn block_owner(ctx: &Ctx, sheet: usize, block: &DeclarationBlock) -> Option<(usize, Option<String>)> {
    let s = &ctx.doc.stylesheets[sheet];
    let owner = block.bound_element.or_else(|| s.owner()).unwrap_or(0);
    let ext = match &s.origin {
        SheetOrigin::ExternalFile { path, .. } => Some(path.clone().unwrap_or_default()),
        _ => None,
    };
    Some((owner, ext))
}

fn color_contrast_fail(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for (si, sheet) in doc.stylesheets.iter().enumerate() {
        for block in &sheet.blocks {
            if !matches!(block.kind, BlockKind::Rule | BlockKind::Inline) {
                continue;
            }
            let fg = block.sets("color");
            let bg = block.sets("background-color") || block.sets("background");
            if !fg && !bg {
                continue;
            }
            let Some((owner, ext)) = block_owner(ctx, si, block) else {
                continue;
            };
            ctx.applies("ColorContrastFail", owner);
            if fg != bg {
                let (set, missing) = if fg { ("color", "background-color") } else { ("background-color", "color") };
                ctx.fail_at(
                    "ColorContrastFail",
                    owner,
                    block.span,
                    ext,
                    format!("Block {:?} sets {set} without {missing}", block.selector_text),
                    &[("selector", block.selector_text.clone()), ("missing", missing.to_string())],
                );
            }
        }
    }
}

fn combine_adj(ctx: &mut Ctx) {
    let doc = ctx.doc;
    let image_only = |i: usize| {
        plain_text(doc, i).is_empty() && doc.descendants(i).any(|d| matches!(d.tag.as_str(), "img" | "svg"))
    };
    for el in doc.elements_by_tag("a") {
        let i = el.doc_index;
        let Some(href) = el.attr("href") else {
            continue;
        };
        let Some(next) = next_element_sibling(ctx, i) else {
            continue;
        };
        let n = doc.element(next);
        if n.tag != "a" || !n.has_attr("href") {
            continue;
        }
        ctx.applies("CombineAdj", i);
        if n.attr("href") == Some(href) && (image_only(i) != image_only(next)) {
            ctx.fail("CombineAdj", i, "Adjacent image and text links point to the same resource", &[(
                "href",
                href.to_string(),
            )]);
        }
    }
}

/// Next sibling element when only whitespace or comments separate them.
fn next_element_sibling(ctx: &Ctx, idx: usize) -> Option<usize> {
    let doc = ctx.doc;
    let parent = doc.element(idx).parent?;
    let children = &doc.element(parent).children;
    let pos = children.iter().position(|c| matches!(c, Node::Element(e) if *e == idx))?;
    for c in &children[pos + 1..] {
        match c {
            Node::Element(e) => return Some(*e),
            Node::Text(s) if doc.text(*s).trim().is_empty() => {}
            Node::Comment(_) => {}
            _ => return None,
        }
    }
    None
}

fn focus_remove_fail(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for el in doc.elements() {
        let Some(handler) = el.attr("onfocus") else {
            continue;
        };
        let i = el.doc_index;
        ctx.applies("FocusRemoveFail", i);
        if handler.contains("blur(") {
            ctx.fail("FocusRemoveFail", i, "onfocus handler removes focus with blur()", &[(
                "onfocus",
                handler.to_string(),
            )]);
        }
    }
}

const ABSOLUTE_UNITS: &[&str] = &["px", "pt", "cm", "mm", "in"];

fn font_size_css(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for (si, sheet) in doc.stylesheets.iter().enumerate() {
        for block in &sheet.blocks {
            if !matches!(block.kind, BlockKind::Rule | BlockKind::Inline) {
                continue;
            }
            for decl in &block.declarations {
                let size = match decl.name.as_str() {
                    "font-size" => Some(decl.value.clone()),
                    "font" => split_font_shorthand(&decl.value).map(|(_, s)| s),
                    _ => None,
                };
                let Some(size) = size else {
                    continue;
                };
                let Some((owner, ext)) = block_owner(ctx, si, block) else {
                    continue;
                };
                ctx.applies("FontSizeCSS", owner);
                let unit = split_length(&size).map(|(_, u)| u).unwrap_or_default();
                if ABSOLUTE_UNITS.contains(&unit.as_str()) {
                    ctx.fail_at(
                        "FontSizeCSS",
                        owner,
                        decl.span,
                        ext,
                        format!("Font size {size} uses an absolute unit"),
                        &[("value", size.clone()), ("unit", unit), ("selector", block.selector_text.clone())],
                    );
                }
            }
        }
    }
}

fn headings_org(ctx: &mut Ctx) {
    let doc = ctx.doc;
    let headings: Vec<(usize, u8)> = doc
        .elements()
        .filter_map(|e| {
            let b = e.tag.as_bytes();
            (b.len() == 2 && b[0] == b'h' && (b'1'..=b'6').contains(&b[1])).then(|| (e.doc_index, b[1] - b'0'))
        })
        .collect();
    let has_h1 = headings.iter().any(|&(_, l)| l == 1);
    let mut prev: Option<u8> = None;
    for (n, &(i, level)) in headings.iter().enumerate() {
        ctx.applies("HeadingsOrg", i);
        if n == 0 && !has_h1 {
            ctx.fail("HeadingsOrg", i, "The page has headings but no h1", &[("level", level.to_string())]);
        } else if let Some(p) = prev.filter(|&p| level > p + 1) {
            ctx.fail("HeadingsOrg", i, format!("Heading level jumps from h{p} to h{level}"), &[
                ("previous", p.to_string()),
                ("level", level.to_string()),
            ]);
        }
        prev = Some(level);
    }
}

fn id_headers_data_tbl(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for el in doc.elements() {
        let Some(headers) = el.attr("headers") else {
            continue;
        };
        if !matches!(el.tag.as_str(), "td" | "th") {
            continue;
        }
        let i = el.doc_index;
        ctx.applies("IdHeadersDataTbl", i);
        let table = doc.ancestors(i).find(|a| a.tag == "table").map(|t| t.doc_index);
        let bad = headers.split_whitespace().find(|id| {
            !doc.elements_with_id(id).iter().any(|&h| {
                doc.element(h).tag == "th" && table.is_none_or(|t| doc.is_descendant(h, t))
            })
        });
        if headers.trim().is_empty() || bad.is_some() {
            ctx.fail("IdHeadersDataTbl", i, "headers attribute does not reference a header cell of this table", &[(
                "headers",
                headers.to_string(),
            )]);
        }
    }
}

fn img_link_fail(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for el in doc.elements_by_tag("a") {
        let i = el.doc_index;
        let has_image = doc.descendants(i).any(|d| matches!(d.tag.as_str(), "img" | "svg"));
        if !has_image || !plain_text(doc, i).is_empty() {
            continue;
        }
        ctx.applies("ImgLinkFail", i);
        if accessible_name(doc, &ctx.styles, i).is_empty() {
            ctx.fail("ImgLinkFail", i, "Link contains only an image without an accessible name", &[]);
        }
    }
}

fn layout_tbl_fail(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for el in doc.elements_by_tag("table") {
        let i = el.doc_index;
        if is_data_table(doc, i) {
            continue;
        }
        ctx.applies("LayoutTblFail", i);
        let offending = own_table_descendants(doc, i)
            .find(|d| matches!(d.tag.as_str(), "th" | "caption"))
            .map(|d| d.tag.clone())
            .or_else(|| el.attr("summary").filter(|s| !s.trim().is_empty()).map(|_| "summary".to_string()));
        if let Some(what) = offending {
            ctx.fail("LayoutTblFail", i, format!("Layout table uses {what}"), &[("markup", what)]);
        }
    }
}

fn link_title_attr(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for el in doc.elements_by_tag("a") {
        let (Some(title), true) = (el.attr("title"), el.has_attr("href")) else {
            continue;
        };
        let i = el.doc_index;
        ctx.applies("LinkTitleAttr", i);
        let text = plain_text(doc, i);
        if collapse(title) == text {
            ctx.fail("LinkTitleAttr", i, "Link title repeats the link text", &[("title", title.to_string())]);
        }
    }
}

fn list_link_groups(ctx: &mut Ctx) {
    let doc = ctx.doc;
    let threshold = ctx.config.list_link_threshold;
    let in_list = |i: usize| {
        let is_list = |t: &str| matches!(t, "ol" | "ul" | "dl" | "menu");
        is_list(&doc.element(i).tag) || doc.has_ancestor(i, |a| is_list(&a.tag))
    };
    for el in doc.elements() {
        let i = el.doc_index;
        let links = doc.child_elements(i).filter(|c| c.tag == "a").count();
        if links < 2 || in_list(i) {
            continue;
        }
        ctx.applies("ListLinkGroups", i);
        let mut run = 0;
        let mut longest = 0;
        for c in doc.child_elements(i) {
            if c.tag == "a" {
                run += 1;
                longest = longest.max(run);
            } else if c.tag != "br" {
                run = 0;
            }
        }
        if longest >= threshold {
            ctx.fail("ListLinkGroups", i, format!("{longest} consecutive links are not grouped in a list"), &[(
                "links",
                longest.to_string(),
            )]);
        }
    }
}

fn scope_data_tbl(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for table in doc.elements_by_tag("table") {
        if !is_data_table(doc, table.doc_index) {
            continue;
        }
        let cells: Vec<usize> = own_table_descendants(doc, table.doc_index)
            .filter(|d| d.tag == "th")
            .map(|d| d.doc_index)
            .collect();
        let referenced: Vec<&str> = own_table_descendants(doc, table.doc_index)
            .filter_map(|d| d.attr("headers"))
            .flat_map(str::split_whitespace)
            .collect();
        for i in cells {
            let th = doc.element(i);
            ctx.applies("ScopeDataTbl", i);
            let scoped = th.attr("scope").is_some_and(|s| !s.trim().is_empty());
            let tied = th.has_attr("headers") || th.id().is_some_and(|id| referenced.contains(&id));
            if !scoped && !tied {
                ctx.fail("ScopeDataTbl", i, "Header cell has no scope and is not referenced by headers", &[]);
            }
        }
    }
}

fn skip_to_main(ctx: &mut Ctx) {
    let doc = ctx.doc;
    let Some(html) = doc.first_by_tag("html") else {
        return;
    };
    let i = html.doc_index;
    ctx.applies("SkipToMain", i);
    let is_main = |t: usize| role(doc, t).as_deref() == Some("main");
    let first = doc.elements_by_tag("a").find(|a| a.has_attr("href"));
    let ok = first
        .and_then(|a| a.attr("href"))
        .and_then(|h| h.trim().strip_prefix('#'))
        .filter(|id| !id.is_empty())
        .is_some_and(|id| {
            let named = {
                let l = id.to_ascii_lowercase();
                l.contains("main") || l.contains("content")
            };
            doc.element_by_id(id).is_some_and(|t| {
                is_main(t.doc_index) || doc.ancestors(t.doc_index).any(|a| is_main(a.doc_index)) || named
            })
        });
    if !ok {
        let href = first.and_then(|a| a.attr("href")).unwrap_or("").to_string();
        ctx.fail("SkipToMain", i, "The first link does not lead to the main content", &[("first_link", href)]);
    }
}

fn submit_btn(ctx: &mut Ctx) {
    let doc = ctx.doc;
    for form in doc.elements_by_tag("form") {
        let i = form.doc_index;
        ctx.applies("SubmitBtn", i);
        let has_submit = doc.descendants(i).any(|d| {
            let ty = d.attr("type").map(|t| t.trim().to_ascii_lowercase());
            match d.tag.as_str() {
                "input" => matches!(ty.as_deref(), Some("submit") | Some("image")),
                "button" => matches!(ty.as_deref(), None | Some("submit") | Some("")),
                _ => false,
            }
        });
        if !has_submit {
            ctx.fail("SubmitBtn", i, "Form has no submit button", &[]);
        }
    }
}
