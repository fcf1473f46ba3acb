//! Element → style mapping.
//!
//! Declarations are matched through `tag`/`.class`/`#id` selectors and the
//! winner per property is chosen by importance, then origin (inline over
//! sheet), then specificity, then source order. `color`, `font-size`,
//! `font-weight` and `visibility` inherit; `background-color` and
//! `display` do not. No browser defaults are invented: a property nobody
//! declares stays absent.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::color::{color_in_shorthand, parse_color, Rgba};
use crate::css::{BlockKind, Declaration};
use crate::dom::{Document, SheetOrigin};
use crate::selector::{best_match, Specificity};
use crate::span::SourceSpan;

/// Font size assumed for `em`/`%` when no ancestor declares one (CSS `medium`).
pub const BASE_FONT_PX: f64 = 16.0;
pub const LARGE_TEXT_PX: f64 = 24.0;
pub const LARGE_BOLD_TEXT_PX: f64 = 18.66;
pub const AA_NORMAL: f64 = 4.5;
pub const AA_LARGE: f64 = 3.0;

const UA_HIDDEN: &[&str] = &["head", "script", "style", "template", "title", "meta", "link", "noscript"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FontSize {
    pub value: f64,
    pub unit: String,
}

/// Where a resolved property value came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub sheet: usize,
    pub block: usize,
    pub declaration: usize,
    pub origin: &'static str,
    pub selector: String,
    pub span: SourceSpan,
    pub value: String,
    pub important: bool,
    /// Set when the value was inherited; the element that declared it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inherited_from: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResolvedStyle {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub color: Option<Rgba>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub background_color: Option<Rgba>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub font_size: Option<FontSize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub font_size_px: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub font_weight: Option<u16>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub display: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visibility: Option<String>,
    pub provenance: BTreeMap<String, Provenance>,
}

impl ResolvedStyle {
    pub fn is_empty(&self) -> bool {
        self.provenance.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct CascadeKey {
    important: bool,
    inline: bool,
    specificity: Specificity,
    order: (usize, usize, usize),
}

#[derive(Debug, Clone)]
struct Candidate {
    key: CascadeKey,
    value: String,
    provenance: Provenance,
}

/// Precomputed styles for every element of one document.
pub struct StyleResolver<'d> {
    doc: &'d Document,
    resolved: Vec<ResolvedStyle>,
}

impl<'d> StyleResolver<'d> {
    pub fn new(doc: &'d Document) -> Self {
        let cascaded = cascade(doc);
        let mut resolved: Vec<ResolvedStyle> = Vec::with_capacity(doc.len());
        let root_px = doc
            .first_by_tag("html")
            .and_then(|h| cascaded[h.doc_index].get("font-size"))
            .and_then(|c| font_size_px(&c.value, BASE_FONT_PX, BASE_FONT_PX))
            .unwrap_or(BASE_FONT_PX);
        for (idx, declared) in cascaded.iter().enumerate() {
            let parent = doc.element(idx).parent.map(|p| resolved[p].clone());
            resolved.push(compute(idx, declared, parent.as_ref(), root_px));
        }
        Self { doc, resolved }
    }

    pub fn document(&self) -> &'d Document {
        self.doc
    }

    pub fn style(&self, idx: usize) -> &ResolvedStyle {
        &self.resolved[idx]
    }

    /// False iff hidden by `display:none`, `visibility:hidden`, the `hidden`
    /// attribute, `aria-hidden="true"` (on the element or an ancestor), or
    /// by being content that is never rendered (`head`, `script`, ...).
    pub fn is_visible(&self, idx: usize) -> bool {
        if idx == 0 {
            return true;
        }
        let hidden_here = |i: usize| {
            let el = self.doc.element(i);
            UA_HIDDEN.contains(&el.tag.as_str())
                || el.has_attr("hidden")
                || el.attr("aria-hidden").is_some_and(|v| v.trim().eq_ignore_ascii_case("true"))
                || self.resolved[i].display.as_deref() == Some("none")
        };
        if hidden_here(idx) || self.doc.ancestors(idx).any(|a| hidden_here(a.doc_index)) {
            return false;
        }
        !matches!(self.resolved[idx].visibility.as_deref(), Some("hidden") | Some("collapse"))
    }

    /// Background behind the element: the nearest declared background,
    /// composited over ancestors until an opaque layer is found.
    pub fn effective_background(&self, idx: usize) -> Option<Rgba> {
        let mut layers = Vec::new();
        let mut cur = Some(idx);
        while let Some(i) = cur {
            if let Some(bg) = self.resolved[i].background_color {
                if bg.a > 0.0 {
                    layers.push(bg);
                    if bg.is_opaque() {
                        break;
                    }
                }
            }
            cur = self.doc.element(i).parent;
        }
        let base = *layers.last().filter(|c| c.is_opaque())?;
        Some(layers.iter().rev().skip(1).fold(base, |acc, layer| layer.over(acc)))
    }

    /// Text color composited over the effective background.
    pub fn effective_foreground(&self, idx: usize) -> Option<Rgba> {
        let fg = self.resolved[idx].color?;
        if fg.is_opaque() {
            Some(fg)
        } else {
            Some(fg.over(self.effective_background(idx)?))
        }
    }

    pub fn is_large_text(&self, idx: usize) -> bool {
        let s = &self.resolved[idx];
        let Some(px) = s.font_size_px else {
            return false;
        };
        let bold = s.font_weight.unwrap_or(400) >= 700;
        px >= LARGE_TEXT_PX || (bold && px >= LARGE_BOLD_TEXT_PX)
    }

    pub fn contrast_threshold(&self, idx: usize) -> f64 {
        if self.is_large_text(idx) {
            AA_LARGE
        } else {
            AA_NORMAL
        }
    }

    /// Serializable mapping for elements selected by `keep`.
    pub fn mapping(&self, keep: impl Fn(usize) -> bool) -> Vec<ElementStyle> {
        self.doc
            .elements()
            .filter(|e| keep(e.doc_index))
            .map(|e| ElementStyle {
                doc_index: e.doc_index,
                tag: e.tag.clone(),
                id: e.id().map(str::to_string),
                classes: e.classes().map(str::to_string).collect(),
                path: self.doc.path(e.doc_index),
                style: self.resolved[e.doc_index].clone(),
            })
            .collect()
    }
}

/// One row of the element → style mapping.
#[derive(Debug, Clone, Serialize)]
pub struct ElementStyle {
    pub doc_index: usize,
    pub tag: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub classes: Vec<String>,
    pub path: String,
    #[serde(flatten)]
    pub style: ResolvedStyle,
}

pub fn resolve_style(element: usize, doc: &Document) -> ResolvedStyle {
    StyleResolver::new(doc).style(element).clone()
}

pub fn is_visible(element: usize, doc: &Document) -> bool {
    StyleResolver::new(doc).is_visible(element)
}

/// Per element, the winning candidate for each tracked property.
fn cascade(doc: &Document) -> Vec<BTreeMap<&'static str, Candidate>> {
    let mut out: Vec<BTreeMap<&'static str, Candidate>> = vec![BTreeMap::new(); doc.len()];
    for (si, sheet) in doc.stylesheets.iter().enumerate() {
        let origin = match sheet.origin {
            SheetOrigin::ExternalFile { .. } => "external-file",
            SheetOrigin::StyleElement { .. } => "style-element",
            SheetOrigin::InlineAttribute { .. } => "inline-attribute",
        };
        for (bi, block) in sheet.blocks.iter().enumerate() {
            let targets: Vec<(usize, Specificity)> = match block.kind {
                BlockKind::Inline => block.bound_element.map(|e| (e, Specificity::default())).into_iter().collect(),
                BlockKind::Rule => doc
                    .elements()
                    .filter_map(|e| best_match(&block.parsed_selectors, e.doc_index, doc).map(|s| (e.doc_index, s)))
                    .collect(),
                _ => Vec::new(),
            };
            if targets.is_empty() {
                continue;
            }
            for (di, decl) in block.declarations.iter().enumerate() {
                for (prop, value) in expand(decl) {
                    for &(el, specificity) in &targets {
                        let key = CascadeKey {
                            important: decl.important,
                            inline: block.kind == BlockKind::Inline,
                            specificity,
                            order: (si, bi, di),
                        };
                        let slot = out[el].get(prop);
                        if slot.is_none_or(|c| c.key < key) {
                            out[el].insert(
                                prop,
                                Candidate {
                                    key,
                                    value: value.clone(),
                                    provenance: Provenance {
                                        sheet: si,
                                        block: bi,
                                        declaration: di,
                                        origin,
                                        selector: block.selector_text.clone(),
                                        span: decl.span,
                                        value: value.clone(),
                                        important: decl.important,
                                        inherited_from: None,
                                    },
                                },
                            );
                        }
                    }
                }
            }
        }
    }
    out
}

/// Map a declaration onto the tracked longhands, dropping invalid values so
/// that they never win the cascade.
fn expand(decl: &Declaration) -> Vec<(&'static str, String)> {
    let v = decl.value.trim();
    let lower = v.to_ascii_lowercase();
    let wide = matches!(lower.as_str(), "inherit" | "initial" | "unset");
    match decl.name.as_str() {
        "color" if wide || lower == "currentcolor" || parse_color(v).is_some() => vec![("color", v.to_string())],
        "background-color" if wide || parse_color(v).is_some() => vec![("background-color", v.to_string())],
        "background" => shorthand_color_token(v).map(|t| vec![("background-color", t)]).unwrap_or_default(),
        "font-size" if wide || font_size_px(v, BASE_FONT_PX, BASE_FONT_PX).is_some() => {
            vec![("font-size", v.to_string())]
        }
        "font-weight" if wide || font_weight(v, 400).is_some() => vec![("font-weight", v.to_string())],
        "font" => {
            let mut out = Vec::new();
            if let Some((weight, size)) = split_font_shorthand(v) {
                if let Some(w) = weight {
                    out.push(("font-weight", w));
                }
                out.push(("font-size", size));
            }
            out
        }
        "display" => vec![("display", lower)],
        "visibility" => vec![("visibility", lower)],
        _ => Vec::new(),
    }
}

fn shorthand_color_token(value: &str) -> Option<String> {
    let c = color_in_shorthand(value)?;
    // Return the literal token so provenance keeps pointing at source text.
    value
        .split(|ch: char| ch.is_whitespace() || ch == ',')
        .find(|t| parse_color(t) == Some(c))
        .map(str::to_string)
        .or_else(|| {
            let start = value.to_ascii_lowercase().find("rgb").or_else(|| value.to_ascii_lowercase().find("hsl"))?;
            let end = value[start..].find(')')? + start + 1;
            Some(value[start..end].to_string())
        })
}

/// `font` shorthand → (weight token, size token). Size is the first token
/// that parses as a font size; weight keywords may only precede it.
pub fn split_font_shorthand(value: &str) -> Option<(Option<String>, String)> {
    let mut weight = None;
    for tok in value.split_whitespace() {
        let size_part = tok.split('/').next().unwrap_or(tok);
        if font_size_px(size_part, BASE_FONT_PX, BASE_FONT_PX).is_some() && !is_bare_weight_number(size_part) {
            return Some((weight, size_part.to_string()));
        }
        if font_weight(tok, 400).is_some() && tok != "normal" {
            weight = Some(tok.to_string());
        }
    }
    None
}

fn is_bare_weight_number(tok: &str) -> bool {
    tok.parse::<f64>().is_ok()
}

/// Split a CSS length into number and unit.
pub fn split_length(value: &str) -> Option<(f64, String)> {
    let v = value.trim();
    let idx = v
        .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-' || c == '+'))
        .unwrap_or(v.len());
    let num: f64 = v[..idx].parse().ok()?;
    Some((num, v[idx..].to_ascii_lowercase()))
}

/// Compute a font size in px against the parent's and the root's size.
pub fn font_size_px(value: &str, parent_px: f64, root_px: f64) -> Option<f64> {
    let lower = value.trim().to_ascii_lowercase();
    let keyword = match lower.as_str() {
        "xx-small" => Some(9.0),
        "x-small" => Some(10.0),
        "small" => Some(13.0),
        "medium" => Some(16.0),
        "large" => Some(18.0),
        "x-large" => Some(24.0),
        "xx-large" => Some(32.0),
        "xxx-large" => Some(48.0),
        "larger" => Some(parent_px * 1.2),
        "smaller" => Some(parent_px / 1.2),
        _ => None,
    };
    if keyword.is_some() {
        return keyword;
    }
    let (n, unit) = split_length(&lower)?;
    if n < 0.0 {
        return None;
    }
    let px = match unit.as_str() {
        "px" => n,
        "pt" => n * 4.0 / 3.0,
        "pc" => n * 16.0,
        "in" => n * 96.0,
        "cm" => n * 96.0 / 2.54,
        "mm" => n * 96.0 / 25.4,
        "q" => n * 96.0 / 101.6,
        "em" => n * parent_px,
        "rem" => n * root_px,
        "%" => n * parent_px / 100.0,
        "ex" | "ch" => n * parent_px / 2.0,
        "" if n == 0.0 => 0.0,
        _ => return None,
    };
    Some(px)
}

pub fn font_weight(value: &str, parent: u16) -> Option<u16> {
    match value.trim().to_ascii_lowercase().as_str() {
        "normal" => Some(400),
        "bold" => Some(700),
        "bolder" => Some(match parent {
            0..=349 => 400,
            350..=549 => 700,
            _ => 900,
        }),
        "lighter" => Some(match parent {
            0..=549 => 100,
            550..=749 => 400,
            _ => 700,
        }),
        other => other.parse::<f64>().ok().filter(|n| (1.0..=1000.0).contains(n)).map(|n| n as u16),
    }
}

fn compute(
    idx: usize,
    cascaded: &BTreeMap<&'static str, Candidate>,
    parent: Option<&ResolvedStyle>,
    root_px: f64,
) -> ResolvedStyle {
    let mut out = ResolvedStyle::default();
    let inherit_prov = |prop: &str, out: &mut ResolvedStyle| {
        if let Some(p) = parent.and_then(|p| p.provenance.get(prop)) {
            let mut p = p.clone();
            p.inherited_from.get_or_insert(idx.saturating_sub(0));
            out.provenance.insert(prop.to_string(), p);
        }
    };
    let own = |prop: &str, out: &mut ResolvedStyle, c: &Candidate| {
        out.provenance.insert(prop.to_string(), c.provenance.clone());
    };
    let wide = |v: &str| v.trim().to_ascii_lowercase();

    // color
    match cascaded.get("color") {
        Some(c) => match wide(&c.value).as_str() {
            "inherit" | "unset" | "currentcolor" => {
                out.color = parent.and_then(|p| p.color);
                inherit_prov("color", &mut out);
            }
            "initial" => {}
            _ => {
                out.color = parse_color(&c.value);
                own("color", &mut out, c);
            }
        },
        None => {
            out.color = parent.and_then(|p| p.color);
            if out.color.is_some() {
                inherit_prov("color", &mut out);
            }
        }
    }

    // background-color
    if let Some(c) = cascaded.get("background-color") {
        match wide(&c.value).as_str() {
            "inherit" => {
                out.background_color = parent.and_then(|p| p.background_color);
                inherit_prov("background-color", &mut out);
            }
            "initial" | "unset" => {}
            _ => {
                out.background_color = parse_color(&c.value);
                own("background-color", &mut out, c);
            }
        }
    }

    // font-size
    let parent_px = parent.and_then(|p| p.font_size_px);
    match cascaded.get("font-size") {
        Some(c) if !matches!(wide(&c.value).as_str(), "inherit" | "unset" | "initial") => {
            out.font_size_px = font_size_px(&c.value, parent_px.unwrap_or(BASE_FONT_PX), root_px);
            out.font_size = split_length(&c.value)
                .map(|(value, unit)| FontSize { value, unit })
                .or_else(|| Some(FontSize { value: out.font_size_px.unwrap_or(BASE_FONT_PX), unit: c.value.trim().to_string() }));
            own("font-size", &mut out, c);
        }
        Some(c) if wide(&c.value) == "initial" => {
            let _ = c;
        }
        _ => {
            if let Some(p) = parent.filter(|p| p.font_size_px.is_some()) {
                out.font_size_px = p.font_size_px;
                out.font_size = p.font_size.clone();
                inherit_prov("font-size", &mut out);
            }
        }
    }

    // font-weight
    let parent_weight = parent.and_then(|p| p.font_weight);
    match cascaded.get("font-weight") {
        Some(c) if !matches!(wide(&c.value).as_str(), "inherit" | "unset" | "initial") => {
            out.font_weight = font_weight(&c.value, parent_weight.unwrap_or(400));
            own("font-weight", &mut out, c);
        }
        Some(c) if wide(&c.value) == "initial" => {
            let _ = c;
        }
        _ => {
            if parent_weight.is_some() {
                out.font_weight = parent_weight;
                inherit_prov("font-weight", &mut out);
            }
        }
    }

    if let Some(c) = cascaded.get("display") {
        if !matches!(c.value.as_str(), "inherit" | "initial" | "unset") {
            out.display = Some(c.value.clone());
            own("display", &mut out, c);
        }
    }

    match cascaded.get("visibility") {
        Some(c) if !matches!(c.value.as_str(), "inherit" | "unset" | "initial") => {
            out.visibility = Some(c.value.clone());
            own("visibility", &mut out, c);
        }
        Some(c) if c.value == "initial" => {}
        _ => {
            if let Some(v) = parent.and_then(|p| p.visibility.clone()) {
                out.visibility = Some(v);
                inherit_prov("visibility", &mut out);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::html::parse_html_str;

    fn by_id(doc: &Document, id: &str) -> usize {
        doc.element_by_id(id).unwrap().doc_index
    }

    #[test]
    fn id_beats_tag() {
        let doc = parse_html_str(r#"<style>#x{color:red} div{color:blue}</style><div id="x">t</div>"#);
        let s = resolve_style(by_id(&doc, "x"), &doc);
        assert_eq!(s.color, Some(Rgba::rgb(255, 0, 0)));
    }

    #[test]
    fn empty_cascade_leaves_everything_absent() {
        let doc = parse_html_str("<div id=x>t</div>");
        let s = resolve_style(by_id(&doc, "x"), &doc);
        assert!(s.color.is_none() && s.background_color.is_none() && s.font_size.is_none());
        assert!(s.is_empty());
    }

    #[test]
    fn inline_beats_id_rule() {
        let doc = parse_html_str(r#"<style>#x{color:red}</style><div id="x" style="color:green">t</div>"#);
        let s = resolve_style(by_id(&doc, "x"), &doc);
        assert_eq!(s.color, Some(Rgba::rgb(0, 128, 0)));
        assert_eq!(s.provenance["color"].origin, "inline-attribute");
    }

    #[test]
    fn important_beats_inline() {
        let doc = parse_html_str(r#"<style>#x{color:red !important}</style><div id="x" style="color:green">t</div>"#);
        assert_eq!(resolve_style(by_id(&doc, "x"), &doc).color, Some(Rgba::rgb(255, 0, 0)));
    }

    #[test]
    fn later_rule_wins_ties() {
        let doc = parse_html_str(r#"<style>p{color:red} p{color:blue}</style><p id=x>t</p>"#);
        assert_eq!(resolve_style(by_id(&doc, "x"), &doc).color, Some(Rgba::rgb(0, 0, 255)));
    }

    #[test]
    fn invalid_value_does_not_win() {
        let doc = parse_html_str(r#"<style>p{color:red} p{color:nonsense}</style><p id=x>t</p>"#);
        assert_eq!(resolve_style(by_id(&doc, "x"), &doc).color, Some(Rgba::rgb(255, 0, 0)));
    }

    #[test]
    fn color_inherits_background_does_not() {
        let doc = parse_html_str(r#"<style>div{color:#111;background-color:#eee}</style><div><span id=s>t</span></div>"#);
        let r = StyleResolver::new(&doc);
        let s = r.style(by_id(&doc, "s"));
        assert_eq!(s.color, Some(Rgba::rgb(17, 17, 17)));
        assert!(s.background_color.is_none());
        assert!(s.provenance["color"].inherited_from.is_some());
        assert_eq!(r.effective_background(by_id(&doc, "s")), Some(Rgba::rgb(238, 238, 238)));
    }

    #[test]
    fn font_sizes_and_large_text() {
        let doc = parse_html_str(
            r#"<style>.big{font-size:24px} .bold{font:bold 14pt serif} .em{font-size:1.5em}</style>
            <p class=big id=a>x</p><p class=bold id=b>y</p><div class=big><span class=em id=c>z</span></div><p id=d>w</p>"#,
        );
        let r = StyleResolver::new(&doc);
        assert!(r.is_large_text(by_id(&doc, "a")));
        assert!(r.is_large_text(by_id(&doc, "b")));
        assert_eq!(r.style(by_id(&doc, "c")).font_size_px, Some(36.0));
        assert!(!r.is_large_text(by_id(&doc, "d")));
    }

    #[test]
    fn visibility_rules() {
        let doc = parse_html_str(
            r#"<p id=a>x</p><div style="display:none"><p id=b>y</p></div><p id=c aria-hidden="true">z</p><p hidden id=d>q</p>"#,
        );
        let r = StyleResolver::new(&doc);
        assert!(r.is_visible(by_id(&doc, "a")));
        assert!(!r.is_visible(by_id(&doc, "b")));
        assert!(!r.is_visible(by_id(&doc, "c")));
        assert!(!r.is_visible(by_id(&doc, "d")));
    }

    #[test]
    fn alpha_background_composites_over_ancestor() {
        let doc = parse_html_str(r#"<div style="background:#fff"><p id=p style="background-color:rgba(0,0,0,0.5)">t</p></div>"#);
        let r = StyleResolver::new(&doc);
        assert_eq!(r.effective_background(by_id(&doc, "p")), Some(Rgba::rgb(128, 128, 128)));
    }

    #[test]
    fn alpha_without_opaque_base_is_unresolved() {
        let doc = parse_html_str(r#"<p id=p style="background-color:rgba(0,0,0,0.5)">t</p>"#);
        assert_eq!(StyleResolver::new(&doc).effective_background(by_id(&doc, "p")), None);
    }

    #[test]
    fn provenance_points_at_declaring_text() {
        let doc = parse_html_str(r#"<style>p { font: bold 20px Arial; background: url(x.png) #abc }</style><p id=x>t</p>"#);
        let s = resolve_style(by_id(&doc, "x"), &doc);
        for p in s.provenance.values() {
            assert!(doc.text(p.span).contains(&p.value), "{p:?}");
        }
    }
}
