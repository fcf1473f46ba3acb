//! CSS split into declaration blocks.
//!
//! Only the block structure and `name: value` pairs are recovered. At-rules
//! (`@media`, `@import`, ...) are kept whole as opaque blocks, and anything
//! that does not look like a rule is kept as a malformed block so that no
//! input is silently dropped.

use serde::Serialize;

use crate::dom::{SheetOrigin, Stylesheet};
use crate::selector::{parse_selector_list, SimpleSelectorChain};
use crate::span::SourceSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockKind {
    Rule,
    AtRule,
    Malformed,
    /// The body of a `style="..."` attribute.
    Inline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Declaration {
    /// Lowercased property name.
    pub name: String,
    /// Value with comments blanked, trimmed and `!important` removed.
    pub value: String,
    pub important: bool,
    pub span: SourceSpan,
    pub value_span: SourceSpan,
}

#[derive(Debug, Clone)]
pub struct DeclarationBlock {
    pub kind: BlockKind,
    pub selector_text: String,
    pub parsed_selectors: Vec<SimpleSelectorChain>,
    pub declarations: Vec<Declaration>,
    pub span: SourceSpan,
    /// Set for inline-attribute blocks: the element the block applies to.
    pub bound_element: Option<usize>,
}

impl DeclarationBlock {
    pub fn is_opaque(&self) -> bool {
        matches!(self.kind, BlockKind::AtRule | BlockKind::Malformed)
    }

    pub fn get(&self, name: &str) -> Option<&Declaration> {
        self.declarations.iter().rev().find(|d| d.name == name)
    }

    pub fn sets(&self, name: &str) -> bool {
        self.declarations.iter().any(|d| d.name == name)
    }
}

/// Parse a standalone stylesheet.
pub fn parse_css(text: &str) -> Stylesheet {
    Stylesheet {
        origin: SheetOrigin::ExternalFile { path: None, link: None },
        blocks: parse_blocks(text, 0),
        text: Some(text.to_string()),
    }
}

/// Blank out comments (outside strings) with spaces, keeping byte offsets.
fn mask_comments(text: &str) -> String {
    let b = text.as_bytes();
    let mut out = b.to_vec();
    let mut i = 0;
    while i < b.len() {
        match b[i] {
            b'"' | b'\'' => i = skip_string(b, i),
            b'/' if b.get(i + 1) == Some(&b'*') => {
                let end = text[i + 2..].find("*/").map(|p| i + 2 + p + 2).unwrap_or(b.len());
                for c in &mut out[i..end] {
                    *c = b' ';
                }
                i = end;
            }
            _ => i += 1,
        }
    }
    String::from_utf8(out).expect("only whole comment bytes replaced with ASCII")
}

/// Index just past the string starting at `i` (which holds the quote).
fn skip_string(b: &[u8], i: usize) -> usize {
    let q = b[i];
    let mut j = i + 1;
    while j < b.len() {
        match b[j] {
            b'\\' => j += 2,
            c if c == q || c == b'\n' => return j + 1,
            _ => j += 1,
        }
    }
    b.len()
}

/// Find the first of `stops` at bracket depth 0, skipping strings.
fn scan_to(b: &[u8], mut i: usize, stops: &[u8]) -> Option<usize> {
    let mut depth = 0i32;
    while i < b.len() {
        let c = b[i];
        match c {
            b'"' | b'\'' => {
                i = skip_string(b, i);
                continue;
            }
            b'(' | b'[' => depth += 1,
            b')' | b']' => depth -= 1,
            _ if depth <= 0 && stops.contains(&c) => return Some(i),
            _ => {}
        }
        i += 1;
    }
    None
}

/// Index of the `}` matching the `{` at `open`.
fn matching_brace(b: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0i32;
    let mut i = open;
    while i < b.len() {
        match b[i] {
            b'"' | b'\'' => {
                i = skip_string(b, i);
                continue;
            }
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
        i += 1;
    }
    None
}

/// Parse `text` into blocks whose spans are shifted by `offset`.
pub fn parse_blocks(text: &str, offset: usize) -> Vec<DeclarationBlock> {
    let masked = mask_comments(text);
    let b = masked.as_bytes();
    let n = b.len();
    let mut blocks = Vec::new();
    let mut i = 0;
    loop {
        while i < n && b[i].is_ascii_whitespace() {
            i += 1;
        }
        // Legacy HTML comment delimiters are ignored at the top level.
        for cdx in ["<!--", "-->"] {
            if masked[i..].starts_with(cdx) {
                i += cdx.len();
            }
        }
        while i < n && b[i].is_ascii_whitespace() {
            i += 1;
        }
        if i >= n {
            break;
        }
        let start = i;
        if b[i] == b'@' {
            let end = match scan_to(b, i, b"{;") {
                Some(p) if b[p] == b';' => p + 1,
                Some(p) => matching_brace(b, p).map(|c| c + 1).unwrap_or(n),
                None => n,
            };
            let prelude_end = scan_to(b, i, b"{;").unwrap_or(end).min(end);
            blocks.push(DeclarationBlock {
                kind: BlockKind::AtRule,
                selector_text: masked[start..prelude_end].trim().to_string(),
                parsed_selectors: Vec::new(),
                declarations: Vec::new(),
                span: SourceSpan::new(start + offset, end + offset),
                bound_element: None,
            });
            i = end;
            continue;
        }
        if b[i] == b'}' {
            blocks.push(opaque_block(&masked, start, i + 1, offset));
            i += 1;
            continue;
        }
        let Some(open) = scan_to(b, i, b"{}") else {
            blocks.push(opaque_block(&masked, start, n, offset));
            break;
        };
        if b[open] == b'}' {
            blocks.push(opaque_block(&masked, start, open + 1, offset));
            i = open + 1;
            continue;
        }
        let close = matching_brace(b, open);
        let body_end = close.unwrap_or(n);
        let end = close.map(|c| c + 1).unwrap_or(n);
        let selector_text = masked[start..open].trim().to_string();
        blocks.push(DeclarationBlock {
            kind: BlockKind::Rule,
            parsed_selectors: parse_selector_list(&selector_text),
            selector_text,
            declarations: parse_declarations_masked(&masked[open + 1..body_end], offset + open + 1),
            span: SourceSpan::new(start + offset, end + offset),
            bound_element: None,
        });
        i = end;
    }
    blocks
}

fn opaque_block(masked: &str, start: usize, end: usize, offset: usize) -> DeclarationBlock {
    DeclarationBlock {
        kind: BlockKind::Malformed,
        selector_text: masked[start..end].trim().to_string(),
        parsed_selectors: Vec::new(),
        declarations: Vec::new(),
        span: SourceSpan::new(start + offset, end + offset),
        bound_element: None,
    }
}

/// Parse a declaration list such as the body of a rule or a `style` attribute.
pub fn parse_declarations(text: &str, offset: usize) -> Vec<Declaration> {
    parse_declarations_masked(&mask_comments(text), offset)
}

fn parse_declarations_masked(body: &str, offset: usize) -> Vec<Declaration> {
    let b = body.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let end = scan_to(b, i, b";").unwrap_or(b.len());
        if let Some(decl) = parse_one(body, i, end, offset) {
            out.push(decl);
        }
        i = end + 1;
    }
    out
}

fn parse_one(body: &str, start: usize, end: usize, offset: usize) -> Option<Declaration> {
    let piece = &body[start..end];
    let lead = piece.len() - piece.trim_start().len();
    let trimmed = piece.trim();
    if trimmed.is_empty() {
        return None;
    }
    let colon = trimmed.find(':')?;
    let name = trimmed[..colon].trim();
    if name.is_empty() || name.contains(|c: char| c.is_whitespace() || c == '{' || c == '}') {
        return None;
    }
    let decl_start = start + lead;
    let decl_end = decl_start + trimmed.len();
    let raw_value = &trimmed[colon + 1..];
    let value_lead = raw_value.len() - raw_value.trim_start().len();
    let mut value = raw_value.trim();
    let mut important = false;
    if let Some(bang) = value.rfind('!') {
        if value[bang + 1..].trim().eq_ignore_ascii_case("important") {
            important = true;
            value = value[..bang].trim_end();
        }
    }
    let value_start = decl_start + colon + 1 + value_lead;
    Some(Declaration {
        name: name.to_ascii_lowercase(),
        value: value.to_string(),
        important,
        span: SourceSpan::new(decl_start + offset, decl_end + offset),
        value_span: SourceSpan::new(value_start + offset, value_start + value.len() + offset),
    })
}

/// Block for a `style="..."` attribute whose value starts at `offset`.
pub fn parse_inline_style(value: &str, offset: usize, element: usize) -> DeclarationBlock {
    DeclarationBlock {
        kind: BlockKind::Inline,
        selector_text: format!("[style]@{element}"),
        parsed_selectors: Vec::new(),
        declarations: parse_declarations(value, offset),
        span: SourceSpan::new(offset, offset + value.len()),
        bound_element: Some(element),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_rules_two_blocks() {
        let blocks = parse_css("a{color:red} p{color:blue}").blocks;
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].selector_text, "a");
        assert_eq!(blocks[1].declarations[0].value, "blue");
    }

    #[test]
    fn empty_input_no_blocks() {
        assert!(parse_css("").blocks.is_empty());
        assert!(parse_css("  /* only a comment */ ").blocks.is_empty());
    }

    #[test]
    fn media_rule_is_one_opaque_block() {
        let blocks = parse_css("@media screen { a{color:red} }").blocks;
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].kind, BlockKind::AtRule);
        assert!(blocks[0].parsed_selectors.is_empty());
        assert_eq!(blocks[0].selector_text, "@media screen");
    }

    #[test]
    fn import_statement_ends_at_semicolon() {
        let blocks = parse_css("@import url(x.css); a{b:c}").blocks;
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].span, SourceSpan::new(0, 19));
    }

    #[test]
    fn declarations_keep_order_and_spans() {
        let text = "p { color : red ; font-size:12px !important; }";
        let blocks = parse_css(text).blocks;
        let d = &blocks[0].declarations;
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].name, "color");
        assert_eq!(d[0].value_span.slice(text), "red");
        assert_eq!(d[0].span.slice(text), "color : red");
        assert!(d[1].important);
        assert_eq!(d[1].value, "12px");
        assert_eq!(d[1].value_span.slice(text), "12px");
    }

    #[test]
    fn comments_and_strings_do_not_confuse_braces() {
        let text = r#"/* } */ a::after { content: "}" } b { color: red }"#;
        let blocks = parse_css(text).blocks;
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[1].selector_text, "b");
    }

    #[test]
    fn unsupported_selector_kept_with_never_matching_chain() {
        let blocks = parse_css("a:hover { color: red }").blocks;
        assert_eq!(blocks.len(), 1);
        assert!(blocks[0].parsed_selectors.iter().all(|c| c.is_never_matching()));
    }

    #[test]
    fn stray_close_brace_is_malformed_block() {
        let blocks = parse_css("} a{x:y}").blocks;
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].kind, BlockKind::Malformed);
    }

    #[test]
    fn unterminated_rule_runs_to_end() {
        let text = "a { color: red";
        let blocks = parse_css(text).blocks;
        assert_eq!(blocks[0].span.end, text.len());
        assert_eq!(blocks[0].declarations[0].value, "red");
    }

    #[test]
    fn offsets_are_applied() {
        let blocks = parse_blocks("a{b:c}", 10);
        assert_eq!(blocks[0].span, SourceSpan::new(10, 16));
        assert_eq!(blocks[0].declarations[0].value_span, SourceSpan::new(14, 15));
    }
}
