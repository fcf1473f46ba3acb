//! Selectors restricted to `tag`, `.class` and `#id` compounds joined by
//! descendant combinators. Anything else (pseudo-classes, attribute
//! selectors, `>`, `+`, `~`) turns the whole chain into the empty chain,
//! which never matches.

use std::cmp::Ordering;

use serde::Serialize;

use crate::dom::Document;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CompoundSelector {
    /// Lowercased; `None` for `*` or a tagless compound.
    pub tag: Option<String>,
    pub id: Option<String>,
    pub classes: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SimpleSelectorChain {
    /// Outermost ancestor first, subject last.
    pub compounds: Vec<CompoundSelector>,
}

/// `(ids, classes, tags)`, compared lexicographically.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Specificity(pub u16, pub u16, pub u16);

impl SimpleSelectorChain {
    pub fn never() -> Self {
        Self::default()
    }

    pub fn is_never_matching(&self) -> bool {
        self.compounds.is_empty()
    }

    pub fn specificity(&self) -> Specificity {
        self.compounds.iter().fold(Specificity::default(), |acc, c| {
            Specificity(
                acc.0 + c.id.is_some() as u16,
                acc.1 + c.classes.len() as u16,
                acc.2 + c.tag.is_some() as u16,
            )
        })
    }
}

impl std::fmt::Display for Specificity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.0, self.1, self.2)
    }
}

/// Split a selector list on commas and parse each chain.
pub fn parse_selector_list(text: &str) -> Vec<SimpleSelectorChain> {
    if text.trim().is_empty() {
        return Vec::new();
    }
    text.split(',').map(parse_chain).collect()
}

pub fn parse_chain(text: &str) -> SimpleSelectorChain {
    let mut compounds = Vec::new();
    for part in text.split_ascii_whitespace() {
        match parse_compound(part) {
            Some(c) => compounds.push(c),
            None => return SimpleSelectorChain::never(),
        }
    }
    SimpleSelectorChain { compounds }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-' || c == '_' || !c.is_ascii()
}

fn parse_compound(text: &str) -> Option<CompoundSelector> {
    let mut out = CompoundSelector::default();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let ident = |i: &mut usize| -> Option<String> {
        let start = *i;
        while *i < chars.len() && is_ident_char(chars[*i]) {
            *i += 1;
        }
        (*i > start).then(|| chars[start..*i].iter().collect())
    };
    if chars.first() == Some(&'*') {
        i = 1;
    } else if chars.first().is_some_and(|c| is_ident_char(*c)) {
        out.tag = Some(ident(&mut i)?.to_ascii_lowercase());
    }
    while i < chars.len() {
        match chars[i] {
            '.' => {
                i += 1;
                out.classes.push(ident(&mut i)?);
            }
            '#' => {
                i += 1;
                if out.id.is_some() {
                    return None;
                }
                out.id = Some(ident(&mut i)?);
            }
            _ => return None,
        }
    }
    if i == 0 && chars.is_empty() {
        return None;
    }
    Some(out)
}

fn compound_matches(c: &CompoundSelector, doc: &Document, idx: usize) -> bool {
    let el = doc.element(idx);
    if let Some(tag) = &c.tag {
        if &el.tag != tag {
            return false;
        }
    }
    if let Some(id) = &c.id {
        if el.attr("id") != Some(id.as_str()) {
            return false;
        }
    }
    c.classes.iter().all(|want| el.classes().any(|have| have == want))
}

/// True iff the chain matches `element`: the last compound on the element
/// itself, each earlier compound on some ancestor, in order.
pub fn matches(selector: &SimpleSelectorChain, element: usize, doc: &Document) -> bool {
    let Some((subject, rest)) = selector.compounds.split_last() else {
        return false;
    };
    if element == 0 || !compound_matches(subject, doc, element) {
        return false;
    }
    // Greedy nearest-ancestor matching is exact for descendant-only chains.
    let mut pending = rest.iter().rev().peekable();
    for anc in doc.ancestors(element) {
        match pending.peek() {
            Some(c) if compound_matches(c, doc, anc.doc_index) => {
                pending.next();
            }
            Some(_) => {}
            None => break,
        }
    }
    pending.peek().is_none()
}

/// Highest specificity among the chains of a list that match the element.
pub fn best_match(list: &[SimpleSelectorChain], element: usize, doc: &Document) -> Option<Specificity> {
    list.iter()
        .filter(|c| matches(c, element, doc))
        .map(SimpleSelectorChain::specificity)
        .max_by(|a, b| a.cmp(b).then(Ordering::Equal))
}
