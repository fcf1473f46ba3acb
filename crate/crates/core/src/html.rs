//! Error-tolerant HTML parsing.
//!
//! A small tag-soup tree builder: mismatched end tags close intervening
//! elements, unmatched end tags are kept as [`Node::StrayEndTag`], and a
//! handful of HTML auto-closing rules (`p`, `li`, table rows and cells, ...)
//! are applied. Every byte of the input ends up in exactly one node, so the
//! tree serializes back to the original text.

use encoding_rs::Encoding;

use crate::dom::{Attribute, Document, Element, Node, ROOT_TAG};
use crate::error::{CoreError, Result};
use crate::span::SourceSpan;

pub const VOID_ELEMENTS: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
    "track", "wbr",
];

const RAW_TEXT: &[&str] = &["script", "style", "textarea", "title", "xmp", "iframe", "noembed", "noframes"];

const CLOSES_P: &[&str] = &[
    "address", "article", "aside", "blockquote", "details", "dialog", "div", "dl", "fieldset",
    "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6", "header",
    "hgroup", "hr", "main", "menu", "nav", "ol", "p", "pre", "section", "table", "ul",
];

const SCOPE_BOUNDARY: &[&str] = &[
    ROOT_TAG, "html", "table", "td", "th", "caption", "button", "object", "template", "marquee",
    "applet",
];

pub fn is_void(tag: &str) -> bool {
    VOID_ELEMENTS.contains(&tag)
}

/// Decode HTML (or any text) bytes. UTF-8 is assumed unless a
/// `<meta charset>` in the first kilobyte names another encoding; bytes
/// that do not decode are an error.
pub fn decode(bytes: &[u8]) -> Result<(String, &'static Encoding)> {
    let encoding = sniff_charset(bytes).unwrap_or(encoding_rs::UTF_8);
    if encoding == encoding_rs::UTF_8 {
        return match std::str::from_utf8(bytes) {
            Ok(s) => Ok((s.to_string(), encoding)),
            Err(e) => Err(CoreError::Undecodable {
                encoding: "UTF-8",
                offset: e.valid_up_to(),
            }),
        };
    }
    match encoding.decode_without_bom_handling_and_without_replacement(bytes) {
        Some(s) => Ok((s.into_owned(), encoding)),
        None => Err(CoreError::Undecodable {
            encoding: encoding.name(),
            offset: 0,
        }),
    }
}

/// Parse HTML bytes, see [`decode`].
pub fn parse_html(bytes: &[u8]) -> Result<Document> {
    let (source, encoding) = decode(bytes)?;
    Ok(parse_html_str(&source).with_encoding(encoding))
}

/// Parse already-decoded HTML text.
pub fn parse_html_str(source: &str) -> Document {
    let elements = TreeBuilder::new(source).build();
    Document::from_parts(source.to_string(), encoding_rs::UTF_8, elements)
}

impl Document {
    fn with_encoding(mut self, encoding: &'static Encoding) -> Self {
        self.encoding = encoding;
        self
    }
}

fn sniff_charset(bytes: &[u8]) -> Option<&'static Encoding> {
    let head = &bytes[..bytes.len().min(1024)];
    let lower: Vec<u8> = head.iter().map(|b| b.to_ascii_lowercase()).collect();
    let needle = b"charset=";
    let pos = lower.windows(needle.len()).position(|w| w == needle)?;
    let rest = &lower[pos + needle.len()..];
    let rest = rest.strip_prefix(b"\"").or_else(|| rest.strip_prefix(b"'")).unwrap_or(rest);
    let end = rest
        .iter()
        .position(|b| !(b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b':' | b'.')))
        .unwrap_or(rest.len());
    Encoding::for_label(&rest[..end])
}

#[derive(Debug)]
enum Token {
    Text(SourceSpan),
    Comment(SourceSpan),
    Declaration(SourceSpan),
    StartTag {
        name: String,
        attributes: Vec<Attribute>,
        self_closing: bool,
        span: SourceSpan,
    },
    EndTag { name: String, span: SourceSpan },
}

struct Tokenizer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    /// Set after a raw-text start tag: everything up to `</name` is text.
    raw_until: Option<String>,
}

impl<'a> Tokenizer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            raw_until: None,
        }
    }

    fn find_from(&self, from: usize, needle: &str) -> Option<usize> {
        self.src[from..].find(needle).map(|p| p + from)
    }

    fn next_token(&mut self) -> Option<Token> {
        if self.pos >= self.bytes.len() {
            return None;
        }
        if let Some(tag) = self.raw_until.take() {
            let start = self.pos;
            let end = self.find_raw_end(start, &tag).unwrap_or(self.bytes.len());
            if end > start {
                self.pos = end;
                return Some(Token::Text(SourceSpan::new(start, end)));
            }
        }
        let start = self.pos;
        if self.bytes[start] == b'<' {
            if let Some(tok) = self.markup(start) {
                return Some(tok);
            }
        }
        // Text runs to the next '<' that could open markup.
        let mut end = start + 1;
        while end < self.bytes.len() {
            if self.bytes[end] == b'<' && self.looks_like_markup(end) {
                break;
            }
            end += 1;
        }
        self.pos = end;
        Some(Token::Text(SourceSpan::new(start, end)))
    }

    fn find_raw_end(&self, from: usize, tag: &str) -> Option<usize> {
        let lower = self.src[from..].to_ascii_lowercase();
        let needle = format!("</{tag}");
        let mut search = 0;
        while let Some(p) = lower[search..].find(&needle) {
            let at = search + p;
            let after = lower.as_bytes().get(at + needle.len()).copied();
            if after.is_none_or(|b| b.is_ascii_whitespace() || b == b'>' || b == b'/') {
                return Some(from + at);
            }
            search = at + needle.len();
        }
        None
    }

    fn looks_like_markup(&self, at: usize) -> bool {
        match self.bytes.get(at + 1) {
            Some(b) if b.is_ascii_alphabetic() => true,
            Some(b'!') | Some(b'?') => true,
            Some(b'/') => self.bytes.get(at + 2).is_some_and(|b| b.is_ascii_alphabetic()),
            _ => false,
        }
    }

    fn markup(&mut self, start: usize) -> Option<Token> {
        let rest = &self.src[start..];
        if rest.starts_with("<!--") {
            let end = self.find_from(start + 4, "-->").map(|p| p + 3).unwrap_or(self.bytes.len());
            self.pos = end;
            return Some(Token::Comment(SourceSpan::new(start, end)));
        }
        if rest.starts_with("<!") || rest.starts_with("<?") {
            let end = self.find_from(start, ">").map(|p| p + 1).unwrap_or(self.bytes.len());
            self.pos = end;
            return Some(Token::Declaration(SourceSpan::new(start, end)));
        }
        if rest.starts_with("</") && self.bytes.get(start + 2).is_some_and(|b| b.is_ascii_alphabetic()) {
            let name_end = self.scan_name(start + 2);
            let name = self.src[start + 2..name_end].to_ascii_lowercase();
            let end = self.find_from(name_end, ">").map(|p| p + 1).unwrap_or(self.bytes.len());
            self.pos = end;
            return Some(Token::EndTag {
                name,
                span: SourceSpan::new(start, end),
            });
        }
        if self.bytes.get(start + 1).is_some_and(|b| b.is_ascii_alphabetic()) {
            return self.start_tag(start);
        }
        None
    }

    fn scan_name(&self, from: usize) -> usize {
        let mut i = from;
        while i < self.bytes.len() {
            let b = self.bytes[i];
            if b.is_ascii_whitespace() || b == b'/' || b == b'>' {
                break;
            }
            i += 1;
        }
        i
    }

    fn start_tag(&mut self, start: usize) -> Option<Token> {
        let name_end = self.scan_name(start + 1);
        let name = self.src[start + 1..name_end].to_ascii_lowercase();
        let mut attributes: Vec<Attribute> = Vec::new();
        let mut i = name_end;
        let mut self_closing = false;
        let n = self.bytes.len();
        loop {
            while i < n && self.bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if i >= n {
                // Unterminated tag: leave it as text.
                return None;
            }
            match self.bytes[i] {
                b'>' => {
                    i += 1;
                    break;
                }
                b'/' => {
                    self_closing = self.bytes.get(i + 1) == Some(&b'>');
                    i += 1;
                    continue;
                }
                _ => {}
            }
            let attr_start = i;
            // An attribute name may start with '=' per the HTML tokenizer.
            i += 1;
            while i < n {
                let b = self.bytes[i];
                if b.is_ascii_whitespace() || b == b'/' || b == b'>' || b == b'=' {
                    break;
                }
                i += 1;
            }
            let attr_name = self.src[attr_start..i].to_ascii_lowercase();
            let mut j = i;
            while j < n && self.bytes[j].is_ascii_whitespace() {
                j += 1;
            }
            let mut value = None;
            let mut value_span = None;
            if j < n && self.bytes[j] == b'=' {
                j += 1;
                while j < n && self.bytes[j].is_ascii_whitespace() {
                    j += 1;
                }
                if j >= n {
                    return None;
                }
                let q = self.bytes[j];
                if q == b'"' || q == b'\'' {
                    let close = self.src[j + 1..].find(q as char)? + j + 1;
                    value_span = Some(SourceSpan::new(j + 1, close));
                    value = Some(self.src[j + 1..close].to_string());
                    i = close + 1;
                } else {
                    let vs = j;
                    while j < n && !self.bytes[j].is_ascii_whitespace() && self.bytes[j] != b'>' {
                        j += 1;
                    }
                    value_span = Some(SourceSpan::new(vs, j));
                    value = Some(self.src[vs..j].to_string());
                    i = j;
                }
            }
            if !attributes.iter().any(|a| a.name == attr_name) {
                attributes.push(Attribute {
                    name: attr_name,
                    value,
                    span: SourceSpan::new(attr_start, i),
                    value_span,
                });
            }
        }
        self.pos = i;
        if RAW_TEXT.contains(&name.as_str()) && !self_closing {
            self.raw_until = Some(name.clone());
        }
        Some(Token::StartTag {
            name,
            attributes,
            self_closing,
            span: SourceSpan::new(start, i),
        })
    }
}

struct TreeBuilder<'a> {
    tokenizer: Tokenizer<'a>,
    elements: Vec<Element>,
    stack: Vec<usize>,
}

impl<'a> TreeBuilder<'a> {
    fn new(src: &'a str) -> Self {
        let root = Element {
            doc_index: 0,
            tag: ROOT_TAG.to_string(),
            attributes: Vec::new(),
            children: Vec::new(),
            parent: None,
            span: SourceSpan::new(0, src.len()),
            start_tag: SourceSpan::new(0, 0),
            end_tag: None,
        };
        Self {
            tokenizer: Tokenizer::new(src),
            elements: vec![root],
            stack: vec![0],
        }
    }

    fn top(&self) -> usize {
        *self.stack.last().expect("root never popped")
    }

    fn top_tag(&self) -> &str {
        &self.elements[self.top()].tag
    }

    fn append(&mut self, node: Node) {
        let top = self.top();
        self.elements[top].children.push(node);
    }

    fn build(mut self) -> Vec<Element> {
        while let Some(tok) = self.tokenizer.next_token() {
            match tok {
                Token::Text(s) => self.append(Node::Text(s)),
                Token::Comment(s) => self.append(Node::Comment(s)),
                Token::Declaration(s) => self.append(Node::Declaration(s)),
                Token::StartTag {
                    name,
                    attributes,
                    self_closing,
                    span,
                } => self.start(name, attributes, self_closing, span),
                Token::EndTag { name, span } => self.end(&name, span),
            }
        }
        while self.stack.len() > 1 {
            self.close_top(None);
        }
        self.elements
    }

    fn start(&mut self, name: String, attributes: Vec<Attribute>, self_closing: bool, span: SourceSpan) {
        self.implicit_closes(&name);
        let idx = self.elements.len();
        let parent = self.top();
        let void = is_void(&name);
        self.elements.push(Element {
            doc_index: idx,
            tag: name,
            attributes,
            children: Vec::new(),
            parent: Some(parent),
            span,
            start_tag: span,
            end_tag: None,
        });
        self.append(Node::Element(idx));
        // `/>` is honoured on every element (SVG content relies on it).
        if !void && !self_closing {
            self.stack.push(idx);
        }
    }

    fn implicit_closes(&mut self, name: &str) {
        if CLOSES_P.contains(&name) {
            self.close_in_scope("p", SCOPE_BOUNDARY);
        }
        match name {
            "li" => {
                self.close_in_scope("li", &["ul", "ol", "menu", ROOT_TAG]);
            }
            "dt" | "dd" => {
                if !self.close_in_scope("dt", &["dl", ROOT_TAG]) {
                    self.close_in_scope("dd", &["dl", ROOT_TAG]);
                }
            }
            "option" => {
                if self.top_tag() == "option" {
                    self.close_top(None);
                }
            }
            "optgroup" => {
                if self.top_tag() == "option" {
                    self.close_top(None);
                }
                if self.top_tag() == "optgroup" {
                    self.close_top(None);
                }
            }
            "tr" => {
                self.close_cells();
                self.close_in_scope("tr", &["table", "thead", "tbody", "tfoot", ROOT_TAG]);
            }
            "td" | "th" => self.close_cells(),
            "thead" | "tbody" | "tfoot" => {
                self.close_cells();
                self.close_in_scope("tr", &["table", ROOT_TAG]);
                for sec in ["thead", "tbody", "tfoot"] {
                    self.close_in_scope(sec, &["table", ROOT_TAG]);
                }
            }
            "h1" | "h2" | "h3" | "h4" | "h5" | "h6" => {
                if matches!(self.top_tag(), "h1" | "h2" | "h3" | "h4" | "h5" | "h6") {
                    self.close_top(None);
                }
            }
            "body" => {
                self.close_in_scope("head", &["html", ROOT_TAG]);
            }
            _ => {}
        }
    }

    fn close_cells(&mut self) {
        if !self.close_in_scope("td", &["tr", "table", ROOT_TAG]) {
            self.close_in_scope("th", &["tr", "table", ROOT_TAG]);
        }
    }

    /// Close the nearest open `tag` (and everything above it) unless a
    /// boundary element is hit first. Returns whether anything was closed.
    fn close_in_scope(&mut self, tag: &str, boundary: &[&str]) -> bool {
        for pos in (1..self.stack.len()).rev() {
            let t = self.elements[self.stack[pos]].tag.as_str();
            if t == tag {
                while self.stack.len() > pos {
                    self.close_top(None);
                }
                return true;
            }
            if boundary.contains(&t) {
                return false;
            }
        }
        false
    }

    fn end(&mut self, name: &str, span: SourceSpan) {
        let found = (1..self.stack.len())
            .rev()
            .find(|&pos| self.elements[self.stack[pos]].tag == name);
        match found {
            Some(pos) => {
                while self.stack.len() > pos + 1 {
                    self.close_top(None);
                }
                self.close_top(Some(span));
            }
            None => self.append(Node::StrayEndTag(span)),
        }
    }

    fn close_top(&mut self, end_tag: Option<SourceSpan>) {
        let idx = self.stack.pop().expect("close on empty stack");
        let el = &self.elements[idx];
        let end = match end_tag {
            Some(s) => s.end,
            None => {
                let last_child_end = el.children.last().map(|c| match *c {
                    Node::Element(i) => self.elements[i].span.end,
                    Node::Text(s) | Node::Comment(s) | Node::Declaration(s) | Node::StrayEndTag(s) => s.end,
                });
                last_child_end.unwrap_or(el.start_tag.end)
            }
        };
        let el = &mut self.elements[idx];
        el.end_tag = end_tag;
        el.span = SourceSpan::new(el.start_tag.start, end);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(doc: &Document) -> Vec<&str> {
        doc.elements().map(|e| e.tag.as_str()).collect()
    }

    #[test]
    fn recovers_unclosed_paragraph() {
        let doc = parse_html(b"<p>a").unwrap();
        assert_eq!(tags(&doc), ["p"]);
        let p = doc.element(1);
        assert_eq!(doc.raw_text(1), "a");
        assert!(p.end_tag.is_none());
        assert_eq!(doc.serialize(), "<p>a");
    }

    #[test]
    fn void_element_has_no_children() {
        let doc = parse_html(br#"<img alt="x">"#).unwrap();
        let img = doc.element(1);
        assert_eq!(img.tag, "img");
        assert_eq!(img.attributes.len(), 1);
        assert!(img.children.is_empty());
    }

    #[test]
    fn nested_round_trip() {
        let src = "<div><span>t</span></div>";
        let doc = parse_html(src.as_bytes()).unwrap();
        assert_eq!(tags(&doc), ["div", "span"]);
        assert_eq!(doc.raw_text(2), "t");
        assert_eq!(doc.serialize(), src);
    }

    #[test]
    fn void_never_takes_children_even_when_closed() {
        let doc = parse_html(b"<input>text</input>").unwrap();
        assert!(doc.element(1).children.is_empty());
        assert_eq!(doc.serialize(), "<input>text</input>");
    }

    #[test]
    fn mismatched_end_tag_closes_intervening() {
        let src = "<div><span><b>x</div><p>y";
        let doc = parse_html(src.as_bytes()).unwrap();
        let p = doc.first_by_tag("p").unwrap();
        assert_eq!(p.parent, Some(0));
        assert_eq!(doc.serialize(), src);
    }

    #[test]
    fn stray_end_tag_is_kept() {
        let src = "a</span>b";
        let doc = parse_html(src.as_bytes()).unwrap();
        assert!(doc.root().children.iter().any(|n| matches!(n, Node::StrayEndTag(_))));
        assert_eq!(doc.serialize(), src);
    }

    #[test]
    fn attributes_are_case_insensitive_names_case_preserving_values() {
        let doc = parse_html(br#"<A HREF="X.html" Title=Hi>"#).unwrap();
        let a = doc.element(1);
        assert_eq!(a.tag, "a");
        assert_eq!(a.attr("href"), Some("X.html"));
        assert_eq!(a.attr("HREF"), Some("X.html"));
        assert_eq!(a.attr("title"), Some("Hi"));
    }

    #[test]
    fn duplicate_attribute_keeps_first() {
        let doc = parse_html(br#"<p id=a ID=b>"#).unwrap();
        assert_eq!(doc.element(1).attributes.len(), 1);
        assert_eq!(doc.element(1).attr("id"), Some("a"));
    }

    #[test]
    fn script_content_is_raw() {
        let src = "<script>if (a < b) { x = '</div>'; }</script><p>z</p>";
        let doc = parse_html(src.as_bytes()).unwrap();
        assert_eq!(tags(&doc), ["script", "p"]);
        assert_eq!(doc.inline_scripts.len(), 1);
        assert_eq!(doc.serialize(), src);
    }

    #[test]
    fn list_items_auto_close() {
        let doc = parse_html(b"<ul><li>a<li>b</ul>").unwrap();
        let items: Vec<_> = doc.elements_by_tag("li").collect();
        assert_eq!(items.len(), 2);
        assert_eq!(items[1].parent, items[0].parent);
    }

    #[test]
    fn table_cells_auto_close() {
        let doc = parse_html(b"<table><tr><td>a<td>b<tr><td>c</table>").unwrap();
        assert_eq!(doc.elements_by_tag("tr").count(), 2);
        for td in doc.elements_by_tag("td") {
            assert_eq!(doc.parent(td.doc_index).unwrap().tag, "tr");
        }
    }

    #[test]
    fn comments_and_doctype_preserved() {
        let src = "<!DOCTYPE html><!-- hi --><html lang=en></html>";
        let doc = parse_html(src.as_bytes()).unwrap();
        assert_eq!(doc.serialize(), src);
    }

    #[test]
    fn unterminated_tag_is_text() {
        let src = "<p>a <b class=\"x";
        let doc = parse_html(src.as_bytes()).unwrap();
        assert_eq!(doc.serialize(), src);
    }

    #[test]
    fn invalid_utf8_is_an_error() {
        assert!(matches!(parse_html(&[b'<', b'p', b'>', 0xff, 0xfe]), Err(CoreError::Undecodable { .. })));
    }

    #[test]
    fn declared_latin1_decodes_and_round_trips() {
        let bytes = b"<meta charset=\"windows-1252\"><p>caf\xe9</p>";
        let doc = parse_html(bytes).unwrap();
        assert!(doc.source.contains("caf\u{e9}"));
        assert_eq!(doc.to_bytes(), bytes.to_vec());
    }

    #[test]
    fn paths_are_css_like() {
        let doc = parse_html(b"<html><body><p>a</p><p id=x>b</p></body></html>").unwrap();
        let p2 = doc.elements_by_tag("p").nth(1).unwrap();
        assert_eq!(doc.path(p2.doc_index), "html > body > p#x:nth-of-type(2)");
    }

    #[test]
    fn descendants_are_contiguous() {
        let doc = parse_html(b"<div><a><b></b></a><i></i></div><p></p>").unwrap();
        let tags: Vec<_> = doc.descendants(1).map(|e| e.tag.as_str()).collect();
        assert_eq!(tags, ["a", "b", "i"]);
    }
}
