//! UI-file detection, block segmentation and reassembly.
//!
//! Blocks of one file are ordered, never overlap, and cover every byte, so
//! concatenating their contents gives the file back.

use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::css::{parse_blocks, BlockKind as CssKind};
use crate::error::{CoreError, Result};
use crate::html::{decode, parse_html_str};
use crate::span::SourceSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockKind {
    HtmlStructural,
    HtmlPreamble,
    JsFunction,
    JsClass,
    CssDeclarationBlock,
    Opaque,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeBlock {
    /// `<path>#<ordinal>`.
    pub block_id: String,
    pub kind: BlockKind,
    pub span: SourceSpan,
    pub content: Vec<u8>,
}

impl CodeBlock {
    pub fn ordinal(&self) -> Option<usize> {
        self.block_id.rsplit_once('#')?.1.parse().ok()
    }

    pub fn text(&self) -> std::borrow::Cow<'_, str> {
        String::from_utf8_lossy(&self.content)
    }
}

/// JSON export shape for a block.
#[derive(Debug, Clone, Serialize)]
pub struct BlockSummary {
    pub block_id: String,
    pub kind: BlockKind,
    pub start: usize,
    pub end: usize,
}

impl From<&CodeBlock> for BlockSummary {
    fn from(b: &CodeBlock) -> Self {
        Self {
            block_id: b.block_id.clone(),
            kind: b.kind,
            start: b.span.start,
            end: b.span.end,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileKind {
    Html,
    Js,
    Css,
    Other,
}

impl FileKind {
    pub fn of(path: &str) -> FileKind {
        let ext = Path::new(path)
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        match ext.as_str() {
            "html" | "htm" | "xhtml" => FileKind::Html,
            "js" | "mjs" | "cjs" | "jsx" => FileKind::Js,
            "css" => FileKind::Css,
            _ => FileKind::Other,
        }
    }
}

pub fn segment(path: &str, content: &[u8]) -> Vec<CodeBlock> {
    if content.is_empty() {
        return Vec::new();
    }
    let kind = FileKind::of(path);
    let whole = || vec![block(path, 0, BlockKind::Opaque, SourceSpan::new(0, content.len()), content.to_vec())];
    if kind == FileKind::Other {
        return whole();
    }
    let Ok((text, encoding)) = decode(content) else {
        return whole();
    };
    let (marked, first_gap) = match kind {
        FileKind::Html => (html_blocks(&text), BlockKind::HtmlPreamble),
        FileKind::Js => (js_blocks(&text), BlockKind::Opaque),
        FileKind::Css => (css_blocks(&text), BlockKind::Opaque),
        FileKind::Other => unreachable!(),
    };
    let pieces = cover(text.len(), marked, first_gap);
    let mut out = Vec::with_capacity(pieces.len());
    let mut byte_pos = 0;
    for (i, (k, span)) in pieces.into_iter().enumerate() {
        let bytes = if encoding == encoding_rs::UTF_8 {
            text.as_bytes()[span.start..span.end].to_vec()
        } else {
            encoding.encode(&text[span.start..span.end]).0.into_owned()
        };
        let byte_span = SourceSpan::new(byte_pos, byte_pos + bytes.len());
        byte_pos = byte_span.end;
        out.push(block(path, i, k, byte_span, bytes));
    }
    // Legacy encodings may not round-trip every sequence; never lose bytes.
    if out.iter().flat_map(|b| b.content.iter()).ne(content.iter()) {
        return whole();
    }
    out
}

fn block(path: &str, ordinal: usize, kind: BlockKind, span: SourceSpan, content: Vec<u8>) -> CodeBlock {
    CodeBlock {
        block_id: format!("{path}#{ordinal}"),
        kind,
        span,
        content,
    }
}

/// Fill the gaps around sorted, disjoint marked spans.
fn cover(len: usize, mut marked: Vec<(BlockKind, SourceSpan)>, first_gap: BlockKind) -> Vec<(BlockKind, SourceSpan)> {
    marked.sort_by_key(|(_, s)| (s.start, s.end));
    let mut out = Vec::new();
    let mut pos = 0;
    for (kind, span) in marked {
        if span.start < pos || span.is_empty() {
            continue;
        }
        if span.start > pos {
            let gap_kind = if out.is_empty() { first_gap } else { BlockKind::Opaque };
            out.push((gap_kind, SourceSpan::new(pos, span.start)));
        }
        out.push((kind, span));
        pos = span.end;
    }
    if pos < len {
        let gap_kind = if out.is_empty() { first_gap } else { BlockKind::Opaque };
        out.push((gap_kind, SourceSpan::new(pos, len)));
    }
    out
}

pub const STRUCTURAL_TAGS: &[&str] = &["section", "header", "nav", "main", "div"];

fn html_blocks(text: &str) -> Vec<(BlockKind, SourceSpan)> {
    let doc = parse_html_str(text);
    doc.elements()
        .filter(|e| STRUCTURAL_TAGS.contains(&e.tag.as_str()))
        .filter(|e| !doc.has_ancestor(e.doc_index, |a| STRUCTURAL_TAGS.contains(&a.tag.as_str())))
        .map(|e| (BlockKind::HtmlStructural, e.span))
        .collect()
}

fn css_blocks(text: &str) -> Vec<(BlockKind, SourceSpan)> {
    parse_blocks(text, 0)
        .into_iter()
        .map(|b| {
            let kind = match b.kind {
                CssKind::Malformed => BlockKind::Opaque,
                _ => BlockKind::CssDeclarationBlock,
            };
            (kind, b.span)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum JsTok {
    Ident,
    Punct(u8),
    Literal,
}

#[derive(Debug, Clone, Copy)]
struct Tok {
    kind: JsTok,
    start: usize,
    end: usize,
    newline_before: bool,
}

const REGEX_PRECEDING_KEYWORDS: &[&str] = &[
    "return", "typeof", "case", "do", "else", "in", "of", "new", "delete", "void", "throw", "instanceof",
    "yield", "await",
];

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$' || b >= 0x80
}

/// Lexical scan good enough to find brace structure: strings, template
/// literals (with nested `${}`), comments and regex literals are skipped.
fn js_tokens(text: &str) -> Vec<Tok> {
    let b = text.as_bytes();
    let n = b.len();
    let mut toks: Vec<Tok> = Vec::new();
    let mut i = 0;
    let mut nl = false;
    while i < n {
        let c = b[i];
        if c == b'\n' {
            nl = true;
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && b.get(i + 1) == Some(&b'/') {
            while i < n && b[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && b.get(i + 1) == Some(&b'*') {
            let end = text[i + 2..].find("*/").map(|p| i + 2 + p + 2).unwrap_or(n);
            nl |= text[i..end].contains('\n');
            i = end;
            continue;
        }
        let start = i;
        let kind = if c == b'"' || c == b'\'' {
            i = skip_quoted(b, i);
            JsTok::Literal
        } else if c == b'`' {
            i = skip_template(b, i);
            JsTok::Literal
        } else if c == b'/' && regex_allowed(text, toks.last()) {
            i = skip_regex(b, i);
            JsTok::Literal
        } else if is_ident_byte(c) {
            while i < n && is_ident_byte(b[i]) {
                i += 1;
            }
            JsTok::Ident
        } else {
            i += 1;
            JsTok::Punct(c)
        };
        i = i.min(n);
        toks.push(Tok {
            kind,
            start,
            end: i,
            newline_before: nl,
        });
        nl = false;
    }
    toks
}

fn regex_allowed(text: &str, prev: Option<&Tok>) -> bool {
    match prev {
        None => true,
        Some(t) => match t.kind {
            JsTok::Punct(p) => !matches!(p, b')' | b']' | b'}'),
            JsTok::Ident => REGEX_PRECEDING_KEYWORDS.contains(&&text[t.start..t.end]),
            JsTok::Literal => false,
        },
    }
}

fn skip_quoted(b: &[u8], start: usize) -> usize {
    let q = b[start];
    let mut i = start + 1;
    while i < b.len() {
        match b[i] {
            b'\\' => i += 2,
            b'\n' => return i,
            c if c == q => return i + 1,
            _ => i += 1,
        }
    }
    b.len()
}

fn skip_template(b: &[u8], start: usize) -> usize {
    let mut i = start + 1;
    while i < b.len() {
        match b[i] {
            b'\\' => i += 2,
            b'`' => return i + 1,
            b'$' if b.get(i + 1) == Some(&b'{') => i = skip_braced_code(b, i + 1),
            _ => i += 1,
        }
    }
    b.len()
}

/// From an opening `{`, return the index after its matching `}`.
fn skip_braced_code(b: &[u8], open: usize) -> usize {
    let mut depth = 0usize;
    let mut i = open;
    while i < b.len() {
        match b[i] {
            b'{' => {
                depth += 1;
                i += 1;
            }
            b'}' => {
                depth -= 1;
                i += 1;
                if depth == 0 {
                    return i;
                }
            }
            b'"' | b'\'' => i = skip_quoted(b, i),
            b'`' => i = skip_template(b, i),
            _ => i += 1,
        }
    }
    b.len()
}

fn skip_regex(b: &[u8], start: usize) -> usize {
    let mut i = start + 1;
    let mut in_class = false;
    while i < b.len() {
        match b[i] {
            b'\\' => i += 2,
            b'\n' => return i,
            b'[' => {
                in_class = true;
                i += 1;
            }
            b']' => {
                in_class = false;
                i += 1;
            }
            b'/' if !in_class => {
                i += 1;
                while i < b.len() && b[i].is_ascii_alphabetic() {
                    i += 1;
                }
                return i;
            }
            _ => i += 1,
        }
    }
    b.len()
}

fn matching(toks: &[Tok], open: usize, o: u8, c: u8) -> Option<usize> {
    let mut depth = 0usize;
    for (k, t) in toks.iter().enumerate().skip(open) {
        match t.kind {
            JsTok::Punct(p) if p == o => depth += 1,
            JsTok::Punct(p) if p == c => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(k);
                }
            }
            _ => {}
        }
    }
    None
}

fn js_blocks(text: &str) -> Vec<(BlockKind, SourceSpan)> {
    let toks = js_tokens(text);
    let word = |k: usize| -> Option<&str> {
        let t = toks.get(k)?;
        (t.kind == JsTok::Ident).then(|| &text[t.start..t.end])
    };
    let mut out = Vec::new();
    let mut depth: i64 = 0;
    let mut k = 0;
    while k < toks.len() {
        let t = toks[k];
        match t.kind {
            JsTok::Punct(b'{' | b'(' | b'[') => depth += 1,
            JsTok::Punct(b'}' | b')' | b']') => depth -= 1,
            JsTok::Ident if depth == 0 => {
                if let Some((kind, end_tok)) = declaration_at(&toks, k, &word) {
                    let mut first = k;
                    while first > 0 && matches!(word(first - 1), Some("export" | "default" | "async")) {
                        first -= 1;
                    }
                    if statement_start(text, &toks, first) {
                        out.push((kind, SourceSpan::new(toks[first].start, toks[end_tok].end)));
                        k = end_tok + 1;
                        continue;
                    }
                }
            }
            _ => {}
        }
        k += 1;
    }
    out
}

/// If token `k` begins a function or class declaration, its kind and the
/// index of the closing brace token.
fn declaration_at<'t>(toks: &[Tok], k: usize, word: &impl Fn(usize) -> Option<&'t str>) -> Option<(BlockKind, usize)> {
    match word(k)? {
        "function" => {
            let mut j = k + 1;
            if toks.get(j)?.kind == JsTok::Punct(b'*') {
                j += 1;
            }
            word(j)?;
            j += 1;
            if toks.get(j)?.kind != JsTok::Punct(b'(') {
                return None;
            }
            let close = matching(toks, j, b'(', b')')?;
            if toks.get(close + 1)?.kind != JsTok::Punct(b'{') {
                return None;
            }
            Some((BlockKind::JsFunction, matching(toks, close + 1, b'{', b'}')?))
        }
        "class" => {
            let named = word(k + 1).is_some_and(|w| w != "extends");
            let anonymous_default = k > 0 && word(k - 1) == Some("default");
            if !named && !anonymous_default {
                return None;
            }
            let open = (k + 1..toks.len()).find(|&j| toks[j].kind == JsTok::Punct(b'{'))?;
            Some((BlockKind::JsClass, matching(toks, open, b'{', b'}')?))
        }
        _ => None,
    }
}

fn statement_start(text: &str, toks: &[Tok], first: usize) -> bool {
    let Some(prev) = first.checked_sub(1).map(|p| toks[p]) else {
        return true;
    };
    match prev.kind {
        JsTok::Punct(b';' | b'}') => true,
        JsTok::Punct(b')' | b']') | JsTok::Literal => toks[first].newline_before,
        JsTok::Ident => toks[first].newline_before && !REGEX_PRECEDING_KEYWORDS.contains(&&text[prev.start..prev.end]),
        JsTok::Punct(_) => false,
    }
}

/// Concatenate blocks in order. Block ids must carry one path and the
/// ordinals `0..n` in sequence.
pub fn reassemble(blocks: &[CodeBlock]) -> Result<Vec<u8>> {
    let mut path: Option<&str> = None;
    for (i, b) in blocks.iter().enumerate() {
        let (p, ord) = b
            .block_id
            .rsplit_once('#')
            .ok_or_else(|| CoreError::Structure(format!("malformed block id {:?}", b.block_id)))?;
        if *path.get_or_insert(p) != p {
            return Err(CoreError::Structure(format!("block {:?} belongs to another file", b.block_id)));
        }
        if ord.parse::<usize>().ok() != Some(i) {
            return Err(CoreError::Structure(format!(
                "block {:?} at position {i}: missing, duplicated or out of order",
                b.block_id
            )));
        }
    }
    Ok(blocks.iter().flat_map(|b| b.content.iter().copied()).collect())
}

/// Index of the block whose span contains `offset`.
pub fn block_at(blocks: &[CodeBlock], offset: usize) -> Option<usize> {
    blocks.iter().position(|b| b.span.start <= offset && offset < b.span.end)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "criterion", rename_all = "kebab-case")]
pub enum UiReason {
    Extension { extension: String },
    Marker { marker: String },
    HtmlTag { tag: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UiFileVerdict {
    pub is_ui: bool,
    pub reasons: Vec<UiReason>,
    /// Set when the content could not be read as text.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rejection: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UiDetector {
    pub extensions: Vec<String>,
    pub markers: Vec<String>,
    pub html_tags: Vec<String>,
}

impl Default for UiDetector {
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        Self {
            extensions: s(&["html", "htm", "js", "css"]),
            markers: s(&["document.getElementById", "innerHTML", "background:", "font:"]),
            html_tags: s(&[
                "html", "head", "body", "div", "span", "p", "a", "img", "button", "input", "form", "table", "ul",
                "ol", "li", "section", "header", "nav", "main", "footer", "label", "select", "textarea", "svg",
                "iframe", "h1", "h2", "h3", "h4", "h5", "h6",
            ]),
        }
    }
}

impl UiDetector {
    pub fn detect(&self, path: &str, content: &[u8]) -> UiFileVerdict {
        let mut reasons = Vec::new();
        if let Some(ext) = Path::new(path).extension().and_then(|e| e.to_str()) {
            if self.extensions.iter().any(|x| x.eq_ignore_ascii_case(ext)) {
                reasons.push(UiReason::Extension {
                    extension: ext.to_ascii_lowercase(),
                });
            }
        }
        let decoded = if content.contains(&0) { None } else { decode(content).ok() };
        let text = match decoded {
            Some((t, _)) => t,
            None => {
                return UiFileVerdict {
                    is_ui: false,
                    reasons: Vec::new(),
                    rejection: Some("undecodable".into()),
                }
            }
        };
        for m in &self.markers {
            if text.contains(m.as_str()) {
                reasons.push(UiReason::Marker { marker: m.clone() });
            }
        }
        if let Some(tag) = self.html_tags.iter().find(|t| contains_tag(&text, t)) {
            reasons.push(UiReason::HtmlTag { tag: tag.clone() });
        }
        UiFileVerdict {
            is_ui: !reasons.is_empty(),
            reasons,
            rejection: None,
        }
    }
}

fn contains_tag(text: &str, tag: &str) -> bool {
    let lower = text.to_ascii_lowercase();
    let needle = format!("<{tag}");
    lower.match_indices(&needle).any(|(i, _)| {
        lower[i + needle.len()..]
            .bytes()
            .next()
            .is_some_and(|b| b == b'>' || b == b'/' || b.is_ascii_whitespace())
    })
}

pub fn detect_ui_file(path: &str, content: &[u8]) -> UiFileVerdict {
    UiDetector::default().detect(path, content)
}

/// Cochran's sample size for a proportion (p = 0.5) with finite-population
/// correction, rounded up and capped at the population.
pub fn sample_size(population: u64, confidence: f64, margin: f64) -> Result<u64> {
    if population == 0 {
        return Err(CoreError::EmptyPopulation);
    }
    if !(0.0 < confidence && confidence < 1.0) || !(0.0 < margin && margin < 1.0) {
        return Err(CoreError::InvalidArgument(format!(
            "confidence {confidence} and margin {margin} must lie in (0, 1)"
        )));
    }
    let z = Normal::standard().inverse_cdf(1.0 - (1.0 - confidence) / 2.0);
    let n0 = z * z * 0.25 / (margin * margin);
    let n = n0 / (1.0 + (n0 - 1.0) / population as f64);
    // Guard against float noise such as 39.0000000001.
    let n = (n - 1e-9).ceil().max(1.0) as u64;
    Ok(n.min(population))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(blocks: &[CodeBlock]) -> Vec<BlockKind> {
        blocks.iter().map(|b| b.kind).collect()
    }

    #[test]
    fn html_structural_blocks() {
        let src = "<!doctype html><body><header>h</header><nav>n</nav><main><div>x</div></main></body>";
        let blocks = segment("a.html", src.as_bytes());
        let structural: Vec<_> = blocks.iter().filter(|b| b.kind == BlockKind::HtmlStructural).collect();
        assert_eq!(structural.len(), 3);
        assert_eq!(blocks[0].kind, BlockKind::HtmlPreamble);
        assert_eq!(reassemble(&blocks).unwrap(), src.as_bytes());
    }

    #[test]
    fn js_functions_and_classes() {
        let src = "function a(){} function b(){} class C{}";
        let blocks = segment("x.js", src.as_bytes());
        let code: Vec<_> = blocks.iter().filter(|b| b.kind != BlockKind::Opaque).collect();
        assert_eq!(code.len(), 3);
        assert_eq!(code[2].kind, BlockKind::JsClass);
        assert_eq!(code[0].text(), "function a(){}");
    }

    #[test]
    fn js_lexer_ignores_braces_in_literals() {
        let src = "const s = '}';\nfunction a(x){ return `${x}}` + /}/.source; }\n// function z(){}\nexport default class extends B { m(){ if(a){} } }";
        let blocks = segment("x.js", src.as_bytes());
        let code: Vec<_> = blocks.iter().filter(|b| b.kind != BlockKind::Opaque).collect();
        assert_eq!(code.len(), 2, "{blocks:#?}");
        assert!(code[0].text().ends_with("source; }"));
        assert!(code[1].text().starts_with("export default class"));
        assert_eq!(reassemble(&blocks).unwrap(), src.as_bytes());
    }

    #[test]
    fn function_expressions_are_not_blocks() {
        let src = "const f = function g(){};\nx(function h(){});";
        let blocks = segment("x.js", src.as_bytes());
        assert_eq!(kinds(&blocks), vec![BlockKind::Opaque]);
    }

    #[test]
    fn css_one_block_per_rule() {
        let src = "a{color:red}\n/* c */ b{x:y}\n@media print{p{}}";
        let blocks = segment("s.css", src.as_bytes());
        assert_eq!(blocks.iter().filter(|b| b.kind == BlockKind::CssDeclarationBlock).count(), 3);
        assert_eq!(reassemble(&blocks).unwrap(), src.as_bytes());
    }

    #[test]
    fn empty_and_unknown() {
        assert!(segment("a.html", b"").is_empty());
        assert_eq!(kinds(&segment("a.txt", b"1 2 3")), vec![BlockKind::Opaque]);
        assert_eq!(kinds(&segment("a.html", &[0xff, 0xfe, 0x00])), vec![BlockKind::Opaque]);
    }

    #[test]
    fn permuted_or_duplicated_blocks_are_rejected() {
        let blocks = segment("a.css", b"a{} b{} c{}");
        let mut permuted = blocks.clone();
        permuted.swap(0, 2);
        assert!(reassemble(&permuted).is_err());
        let mut dup = blocks.clone();
        dup[1] = dup[0].clone();
        assert!(reassemble(&dup).is_err());
        assert!(reassemble(&blocks[1..]).is_err());
    }

    #[test]
    fn ui_detection() {
        let v = detect_ui_file("styles.css", b"");
        assert!(v.is_ui);
        assert!(matches!(v.reasons[0], UiReason::Extension { .. }));
        assert!(!detect_ui_file("math.txt", b"1 2 3\n4").is_ui);
        let v = detect_ui_file("app.txt", b"el.innerHTML = x");
        assert!(v.is_ui && v.reasons == vec![UiReason::Marker { marker: "innerHTML".into() }]);
        let v = detect_ui_file("blob.bin", &[0, 159, 146, 150]);
        assert!(!v.is_ui && v.reasons.is_empty());
        assert_eq!(v.rejection.as_deref(), Some("undecodable"));
        assert!(detect_ui_file("t.txt", b"<div class=x>").is_ui);
        assert!(!detect_ui_file("t.txt", b"a <b and <pre").is_ui);
    }

    #[test]
    fn cochran_examples() {
        assert_eq!(sample_size(1, 0.9, 0.1).unwrap(), 1);
        assert_eq!(sample_size(86, 0.9, 0.1).unwrap(), 39);
        assert_eq!(sample_size(10_000, 0.9, 0.1).unwrap(), 68);
        assert!(sample_size(0, 0.9, 0.1).is_err());
    }
}
