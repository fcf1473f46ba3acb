//! Element tree produced by [`crate::html::parse_html`].
//!
//! Elements live in an arena indexed by `doc_index`, assigned in document
//! (pre-)order. Index 0 is a synthetic `#document` root covering the whole
//! source. Nothing in the tree is decoded: attribute values and text keep
//! their raw bytes so that every node maps back onto the source exactly.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use encoding_rs::Encoding;
use serde::{Deserialize, Serialize};

use crate::css::{self, DeclarationBlock};
use crate::error::{CoreError, Result};
use crate::span::SourceSpan;

pub const ROOT_TAG: &str = "#document";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    /// Lowercased.
    pub name: String,
    /// Raw value, quotes stripped, entities left as written. `None` for bare attributes.
    pub value: Option<String>,
    pub span: SourceSpan,
    pub value_span: Option<SourceSpan>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Element(usize),
    Text(SourceSpan),
    Comment(SourceSpan),
    /// `<!DOCTYPE ...>`, `<?...>` and other markup declarations.
    Declaration(SourceSpan),
    /// An end tag with no matching open element.
    StrayEndTag(SourceSpan),
}

impl Node {
    pub fn span(&self, doc: &Document) -> SourceSpan {
        match *self {
            Node::Element(i) => doc.element(i).span,
            Node::Text(s) | Node::Comment(s) | Node::Declaration(s) | Node::StrayEndTag(s) => s,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Element {
    pub doc_index: usize,
    /// Lowercased tag name.
    pub tag: String,
    pub attributes: Vec<Attribute>,
    pub children: Vec<Node>,
    pub parent: Option<usize>,
    pub span: SourceSpan,
    pub start_tag: SourceSpan,
    /// `None` when the element was closed implicitly (or is void).
    pub end_tag: Option<SourceSpan>,
}

impl Element {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attribute(name).map(|a| a.value.as_deref().unwrap_or(""))
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        if name.bytes().any(|b| b.is_ascii_uppercase()) {
            let lower = name.to_ascii_lowercase();
            self.attributes.iter().find(|a| a.name == lower)
        } else {
            self.attributes.iter().find(|a| a.name == name)
        }
    }

    pub fn has_attr(&self, name: &str) -> bool {
        self.attribute(name).is_some()
    }

    pub fn id(&self) -> Option<&str> {
        self.attr("id").filter(|v| !v.is_empty())
    }

    pub fn classes(&self) -> impl Iterator<Item = &str> {
        self.attr("class").unwrap_or("").split_ascii_whitespace()
    }

    pub fn is(&self, tag: &str) -> bool {
        self.tag == tag
    }

    /// Byte offset just past the tag name inside the start tag: where new
    /// attributes get inserted.
    pub fn attribute_insert_point(&self) -> usize {
        self.start_tag.start + 1 + self.tag.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SheetOrigin {
    ExternalFile {
        path: Option<String>,
        /// The `<link>` element that pulled the file in.
        link: Option<usize>,
    },
    StyleElement { element: usize },
    InlineAttribute { element: usize },
}

#[derive(Debug, Clone)]
pub struct Stylesheet {
    pub origin: SheetOrigin,
    pub blocks: Vec<DeclarationBlock>,
    /// Text the block spans index into: the external file for linked
    /// sheets, otherwise the document source.
    pub text: Option<String>,
}

impl Stylesheet {
    /// Element that represents this sheet in the document (`<link>`, `<style>`
    /// or the element carrying the `style` attribute).
    pub fn owner(&self) -> Option<usize> {
        match self.origin {
            SheetOrigin::ExternalFile { link, .. } => link,
            SheetOrigin::StyleElement { element } | SheetOrigin::InlineAttribute { element } => {
                Some(element)
            }
        }
    }

    pub fn is_inline(&self) -> bool {
        matches!(self.origin, SheetOrigin::InlineAttribute { .. })
    }

    pub fn is_external(&self) -> bool {
        matches!(self.origin, SheetOrigin::ExternalFile { .. })
    }
}

#[derive(Debug, Clone)]
pub struct InlineScript {
    pub element: usize,
    pub span: SourceSpan,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct Document {
    pub path: Option<PathBuf>,
    pub source: String,
    pub encoding: &'static Encoding,
    pub(crate) elements: Vec<Element>,
    pub stylesheets: Vec<Stylesheet>,
    pub inline_scripts: Vec<InlineScript>,
    /// `<link rel=stylesheet>` targets that could not be read locally.
    pub unresolved_links: Vec<String>,
    ids: HashMap<String, Vec<usize>>,
}

impl Document {
    pub(crate) fn from_parts(source: String, encoding: &'static Encoding, elements: Vec<Element>) -> Self {
        let mut ids: HashMap<String, Vec<usize>> = HashMap::new();
        for el in &elements {
            if let Some(id) = el.id() {
                ids.entry(id.to_string()).or_default().push(el.doc_index);
            }
        }
        let mut doc = Document {
            path: None,
            source,
            encoding,
            elements,
            stylesheets: Vec::new(),
            inline_scripts: Vec::new(),
            unresolved_links: Vec::new(),
            ids,
        };
        doc.collect_embedded();
        doc
    }

    /// Parse a file and pull in locally available `<link rel="stylesheet">` targets.
    pub fn load(path: &Path) -> Result<Document> {
        let bytes = std::fs::read(path).map_err(|source| CoreError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut doc = crate::html::parse_html(&bytes)?;
        doc.path = Some(path.to_path_buf());
        doc.resolve_links(path.parent().unwrap_or(Path::new(".")));
        Ok(doc)
    }

    /// Resolve linked stylesheets relative to `base`. Remote or missing
    /// targets are recorded in `unresolved_links`.
    pub fn resolve_links(&mut self, base: &Path) {
        let mut linked = Vec::new();
        for el in &self.elements {
            if !el.is("link") {
                continue;
            }
            let is_sheet = el
                .attr("rel")
                .map(|r| r.split_ascii_whitespace().any(|t| t.eq_ignore_ascii_case("stylesheet")))
                .unwrap_or(false);
            let Some(href) = el.attr("href").filter(|h| !h.trim().is_empty()) else {
                continue;
            };
            if is_sheet {
                linked.push((el.doc_index, href.trim().to_string()));
            }
        }
        for (link, href) in linked {
            let local = !href.contains("://") && !href.starts_with("//") && !href.starts_with("data:");
            let clean = href.split(['?', '#']).next().unwrap_or("");
            let target = base.join(clean.trim_start_matches('/'));
            match std::fs::read_to_string(&target) {
                Ok(text) if local => {
                    let blocks = css::parse_blocks(&text, 0);
                    self.stylesheets.push(Stylesheet {
                        origin: SheetOrigin::ExternalFile {
                            path: Some(target.display().to_string()),
                            link: Some(link),
                        },
                        blocks,
                        text: Some(text),
                    });
                }
                _ => self.unresolved_links.push(href),
            }
        }
        self.sort_sheets();
    }

    /// Attach a stylesheet that is not referenced from the markup (e.g. a
    /// CSS file passed alongside the page).
    pub fn attach_stylesheet(&mut self, path: Option<String>, text: String) {
        let blocks = css::parse_blocks(&text, 0);
        self.stylesheets.push(Stylesheet {
            origin: SheetOrigin::ExternalFile { path, link: None },
            blocks,
            text: Some(text),
        });
        self.sort_sheets();
    }

    fn sort_sheets(&mut self) {
        // Cascade order follows the owner's position in the document; detached
        // sheets come first.
        self.stylesheets.sort_by_key(|s| (s.owner().map(|o| o + 1).unwrap_or(0), s.is_inline()));
    }

    fn collect_embedded(&mut self) {
        let mut sheets = Vec::new();
        let mut scripts = Vec::new();
        for el in &self.elements {
            if el.is("style") {
                let (offset, text) = match el.children.first() {
                    Some(Node::Text(s)) => (s.start, s.slice(&self.source)),
                    _ => (el.start_tag.end, ""),
                };
                sheets.push(Stylesheet {
                    origin: SheetOrigin::StyleElement { element: el.doc_index },
                    blocks: css::parse_blocks(text, offset),
                    text: None,
                });
            }
            if let Some(attr) = el.attribute("style") {
                if let (Some(value), Some(vspan)) = (&attr.value, attr.value_span) {
                    let block = css::parse_inline_style(value, vspan.start, el.doc_index);
                    sheets.push(Stylesheet {
                        origin: SheetOrigin::InlineAttribute { element: el.doc_index },
                        blocks: vec![block],
                        text: None,
                    });
                }
            }
            if el.is("script") && !el.has_attr("src") {
                if let Some(Node::Text(s)) = el.children.first() {
                    scripts.push(InlineScript {
                        element: el.doc_index,
                        span: *s,
                        text: s.slice(&self.source).to_string(),
                    });
                }
            }
        }
        self.stylesheets = sheets;
        self.inline_scripts = scripts;
        self.sort_sheets();
    }

    pub fn root(&self) -> &Element {
        &self.elements[0]
    }

    pub fn element(&self, doc_index: usize) -> &Element {
        &self.elements[doc_index]
    }

    pub fn get(&self, doc_index: usize) -> Option<&Element> {
        self.elements.get(doc_index)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.len() <= 1
    }

    /// All elements in document order, the synthetic root excluded.
    pub fn elements(&self) -> impl Iterator<Item = &Element> {
        self.elements.iter().skip(1)
    }

    pub fn elements_by_tag<'a>(&'a self, tag: &'a str) -> impl Iterator<Item = &'a Element> + 'a {
        self.elements().filter(move |e| e.tag == tag)
    }

    pub fn first_by_tag(&self, tag: &str) -> Option<&Element> {
        self.elements().find(|e| e.tag == tag)
    }

    /// Elements carrying the given id, in document order.
    pub fn elements_with_id(&self, id: &str) -> &[usize] {
        self.ids.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn element_by_id(&self, id: &str) -> Option<&Element> {
        self.elements_with_id(id).first().map(|&i| &self.elements[i])
    }

    pub fn parent(&self, doc_index: usize) -> Option<&Element> {
        self.elements[doc_index].parent.map(|p| &self.elements[p])
    }

    /// Proper ancestors, nearest first, excluding the synthetic root.
    pub fn ancestors(&self, doc_index: usize) -> impl Iterator<Item = &Element> {
        let mut cur = self.elements[doc_index].parent;
        std::iter::from_fn(move || {
            let p = cur.filter(|&p| p != 0)?;
            cur = self.elements[p].parent;
            Some(&self.elements[p])
        })
    }

    pub fn has_ancestor(&self, doc_index: usize, pred: impl Fn(&Element) -> bool) -> bool {
        self.ancestors(doc_index).any(pred)
    }

    /// Proper descendants in document order.
    pub fn descendants(&self, doc_index: usize) -> impl Iterator<Item = &Element> {
        // Pre-order numbering makes every descendant a contiguous run after the element.
        self.elements[doc_index + 1..]
            .iter()
            .take_while(move |e| self.is_descendant(e.doc_index, doc_index))
    }

    pub fn is_descendant(&self, candidate: usize, ancestor: usize) -> bool {
        let mut cur = self.elements[candidate].parent;
        while let Some(p) = cur {
            if p == ancestor {
                return true;
            }
            cur = self.elements[p].parent;
        }
        false
    }

    pub fn child_elements(&self, doc_index: usize) -> impl Iterator<Item = &Element> {
        self.elements[doc_index].children.iter().filter_map(move |n| match n {
            Node::Element(i) => Some(&self.elements[*i]),
            _ => None,
        })
    }

    pub fn text(&self, span: SourceSpan) -> &str {
        span.slice(&self.source)
    }

    /// Raw concatenated text of all descendant text nodes, skipping
    /// script/style/template content. Not decoded.
    pub fn raw_text(&self, doc_index: usize) -> String {
        let mut out = String::new();
        self.push_raw_text(doc_index, &mut out);
        out
    }

    fn push_raw_text(&self, doc_index: usize, out: &mut String) {
        let el = &self.elements[doc_index];
        if matches!(el.tag.as_str(), "script" | "style" | "template") {
            return;
        }
        for child in &el.children {
            match child {
                Node::Text(s) => out.push_str(s.slice(&self.source)),
                Node::Element(i) => self.push_raw_text(*i, out),
                _ => {}
            }
        }
    }

    /// True if the element has a direct text child with non-whitespace content.
    pub fn has_direct_text(&self, doc_index: usize) -> bool {
        let el = &self.elements[doc_index];
        if matches!(el.tag.as_str(), "script" | "style" | "template" | "title" | "#document") {
            return false;
        }
        el.children.iter().any(|c| match c {
            Node::Text(s) => !s.slice(&self.source).trim().is_empty(),
            _ => false,
        })
    }

    /// CSS-like locator such as `html > body > main#content > p:nth-of-type(2)`.
    pub fn path(&self, doc_index: usize) -> String {
        let mut parts = Vec::new();
        let mut cur = Some(doc_index);
        while let Some(i) = cur.filter(|&i| i != 0) {
            let el = &self.elements[i];
            let mut part = el.tag.clone();
            if let Some(id) = el.id() {
                part.push('#');
                part.push_str(id);
            }
            if let Some(p) = el.parent {
                let same: Vec<usize> = self
                    .child_elements(p)
                    .filter(|s| s.tag == el.tag)
                    .map(|s| s.doc_index)
                    .collect();
                if same.len() > 1 {
                    let nth = same.iter().position(|&s| s == i).unwrap_or(0) + 1;
                    part.push_str(&format!(":nth-of-type({nth})"));
                }
            }
            parts.push(part);
            cur = el.parent;
        }
        parts.reverse();
        parts.join(" > ")
    }

    /// Rebuild the source from the tree. Equals `source` for every parse.
    pub fn serialize(&self) -> String {
        let mut out = String::with_capacity(self.source.len());
        for child in &self.elements[0].children {
            self.serialize_node(child, &mut out);
        }
        out
    }

    fn serialize_node(&self, node: &Node, out: &mut String) {
        match node {
            Node::Element(i) => {
                let el = &self.elements[*i];
                out.push_str(el.start_tag.slice(&self.source));
                for c in &el.children {
                    self.serialize_node(c, out);
                }
                if let Some(end) = el.end_tag {
                    out.push_str(end.slice(&self.source));
                }
            }
            Node::Text(s) | Node::Comment(s) | Node::Declaration(s) | Node::StrayEndTag(s) => {
                out.push_str(s.slice(&self.source))
            }
        }
    }

    /// Serialized tree re-encoded in the document's original encoding.
    pub fn to_bytes(&self) -> Vec<u8> {
        let text = self.serialize();
        if self.encoding == encoding_rs::UTF_8 {
            text.into_bytes()
        } else {
            let (bytes, _, _) = self.encoding.encode(&text);
            bytes.into_owned()
        }
    }
}
