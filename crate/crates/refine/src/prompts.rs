//! Prompt assembly for the generation strategies and the ReAct repair step.
//!
//! Text lives in `templates/` with `{{slot}}` placeholders. Wording taken
//! verbatim from the method description is wrapped in `[[...]]` in the
//! template files so it stays distinguishable from filler; the markers are
//! removed when rendering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use a11y_core::exemplars::Exemplar;
use a11y_core::rules::{lookup, Finding};
use a11y_core::segment::{BlockKind, CodeBlock};
use serde::{Deserialize, Serialize};

use crate::gateway::Message;
use crate::hashing::sha256_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Naive,
    ZeroShot,
    FewShot,
    SelfCriticism,
    #[serde(rename = "feeda11y")]
    FeedA11y,
}

impl Strategy {
    pub const ALL: [Strategy; 5] =
        [Strategy::Naive, Strategy::ZeroShot, Strategy::FewShot, Strategy::SelfCriticism, Strategy::FeedA11y];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Naive => "naive",
            Strategy::ZeroShot => "zero-shot",
            Strategy::FewShot => "few-shot",
            Strategy::SelfCriticism => "self-criticism",
            Strategy::FeedA11y => "feeda11y",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase().replace('_', "-");
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == s || k.as_str().replace('-', "") == s)
            .ok_or_else(|| format!("unknown strategy {s:?}"))
    }
}

/// Section toggles for the ReAct prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptOptions {
    pub accessibility_instructions: bool,
    pub guideline_descriptions: bool,
    pub code_examples: bool,
    pub testing_rules: bool,
    pub style_properties: bool,
}

impl Default for PromptOptions {
    fn default() -> Self {
        Self {
            accessibility_instructions: true,
            guideline_descriptions: true,
            code_examples: true,
            testing_rules: true,
            style_properties: true,
        }
    }
}

impl PromptOptions {
    pub fn none() -> Self {
        Self {
            accessibility_instructions: false,
            guideline_descriptions: false,
            code_examples: false,
            testing_rules: false,
            style_properties: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("summary is empty")]
    EmptySummary,
    #[error("code is empty")]
    EmptyCode,
    #[error("few-shot prompting needs a non-empty exemplar library")]
    EmptyExemplars,
    #[error("a repair prompt needs at least one finding")]
    NoFindings,
    #[error("finding {rule_id} at byte {offset} lies outside block {block_id}")]
    ForeignFinding { rule_id: String, offset: usize, block_id: String },
    #[error("template {template} has no value for slot {slot}")]
    MissingSlot { template: &'static str, slot: String },
    #[error("strategy {0} is only available through the refinement loop")]
    LoopOnly(Strategy),
}

pub struct Template {
    pub name: &'static str,
    pub raw: &'static str,
}

macro_rules! templates {
    ($($ident:ident => $file:literal),* $(,)?) => {
        $(pub const $ident: Template = Template { name: $file, raw: include_str!(concat!("../templates/", $file)) };)*
        pub const ALL_TEMPLATES: &[Template] = &[$($ident),*];
    };
}

templates! {
    PERSONA => "persona.txt",
    SUMMARY_BLOCK => "summary_block.txt",
    ZERO_SHOT => "zero_shot.txt",
    FEW_SHOT_HEADER => "few_shot_header.txt",
    FEW_SHOT_ENTRY => "few_shot_entry.txt",
    REVIEW => "review.txt",
    SUMMARY_REQUEST => "summary_request.txt",
    REACT_PERSONA => "react_persona.txt",
    REACT_SUMMARY => "react_summary.txt",
    REACT_A11Y => "react_a11y.txt",
    REACT_CODE => "react_code.txt",
    REACT_REPORT => "react_report.txt",
    REACT_GUIDELINES => "react_guidelines.txt",
    REACT_EXAMPLES => "react_examples.txt",
    REACT_TEST_RULES => "react_test_rules.txt",
    REACT_STYLES => "react_styles.txt",
    REACT_SCAFFOLD => "react_scaffold.txt",
    REPORT_REQUEST => "report_request.txt",
}

impl Template {
    pub fn sha256(&self) -> String {
        sha256_hex(self.raw.as_bytes())
    }

    /// Fill `{{slot}}` placeholders in one pass. Values are inserted as-is and
    /// never rescanned.
    pub fn render(&self, slots: &[(&str, &str)]) -> Result<String, PromptError> {
        let text = self.raw.replace("[[", "").replace("]]", "");
        let mut out = String::with_capacity(text.len());
        let mut rest = text.as_str();
        while let Some(open) = rest.find("{{") {
            out.push_str(&rest[..open]);
            let after = &rest[open + 2..];
            let Some(close) = after.find("}}") else {
                out.push_str(&rest[open..]);
                rest = "";
                break;
            };
            let slot = &after[..close];
            let value = slots
                .iter()
                .find(|(k, _)| *k == slot)
                .map(|(_, v)| *v)
                .ok_or_else(|| PromptError::MissingSlot { template: self.name, slot: slot.to_string() })?;
            out.push_str(value);
            rest = &after[close + 2..];
        }
        out.push_str(rest);
        Ok(out)
    }

    /// Text between `[[` and `]]` markers.
    pub fn quoted_fragments(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut rest = self.raw;
        while let Some(open) = rest.find("[[") {
            let after = &rest[open + 2..];
            let Some(close) = after.find("]]") else { break };
            out.push(&after[..close]);
            rest = &after[close + 2..];
        }
        out
    }
}

/// Content hashes of every template, keyed by file name.
pub fn template_hashes() -> BTreeMap<String, String> {
    ALL_TEMPLATES.iter().map(|t| (t.name.to_string(), t.sha256())).collect()
}

fn fixed(t: &Template) -> String {
    t.render(&[]).expect("template without slots")
}

pub fn naive_text(summary: &str) -> Result<String, PromptError> {
    if summary.trim().is_empty() {
        return Err(PromptError::EmptySummary);
    }
    Ok(format!("{}\n\n{}", fixed(&PERSONA), SUMMARY_BLOCK.render(&[("summary", summary)])?))
}

fn zero_shot_text(summary: &str) -> Result<String, PromptError> {
    Ok(format!("{}\n\n{}", naive_text(summary)?, fixed(&ZERO_SHOT)))
}

fn few_shot_text(summary: &str, exemplars: &[Exemplar]) -> Result<String, PromptError> {
    if exemplars.is_empty() {
        return Err(PromptError::EmptyExemplars);
    }
    let mut text = format!("{}\n\n{}", zero_shot_text(summary)?, fixed(&FEW_SHOT_HEADER));
    for (n, ex) in exemplars.iter().enumerate() {
        let description = lookup(ex.rule_id).map(|r| r.description).unwrap_or("");
        let index = (n + 1).to_string();
        let entry = FEW_SHOT_ENTRY.render(&[
            ("index", &index),
            ("rule_id", ex.rule_id),
            ("description", description),
            ("correct", ex.correct.trim_end()),
            ("counter", ex.counter.trim_end()),
        ])?;
        text.push_str("\n\n");
        text.push_str(&entry);
    }
    Ok(text)
}

/// Generator prompt for a baseline strategy. Self-criticism generates with
/// the zero-shot prompt; its review step uses [`build_review_prompt`].
pub fn build_prompt(strategy: Strategy, summary: &str, exemplars: &[Exemplar]) -> Result<Vec<Message>, PromptError> {
    let text = match strategy {
        Strategy::Naive => naive_text(summary)?,
        Strategy::ZeroShot | Strategy::SelfCriticism => zero_shot_text(summary)?,
        Strategy::FewShot => few_shot_text(summary, exemplars)?,
        Strategy::FeedA11y => return Err(PromptError::LoopOnly(strategy)),
    };
    Ok(vec![Message::user(text)])
}

pub fn build_review_prompt(code: &str) -> Result<Vec<Message>, PromptError> {
    if code.is_empty() {
        return Err(PromptError::EmptyCode);
    }
    Ok(vec![Message::user(REVIEW.render(&[("code", code)])?)])
}

pub fn build_summary_prompt(path: &str, code: &str) -> Result<Vec<Message>, PromptError> {
    if code.trim().is_empty() {
        return Err(PromptError::EmptyCode);
    }
    Ok(vec![Message::user(SUMMARY_REQUEST.render(&[("path", path), ("code", code)])?)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Section {
    Persona,
    Summary,
    Instructions,
    Code,
    Report,
    Guidelines,
    Examples,
    TestRules,
    Styles,
    Scaffold,
}

impl Section {
    /// Option flag that gates this section, if any.
    pub fn enabled(self, o: &PromptOptions) -> bool {
        match self {
            Section::Instructions => o.accessibility_instructions,
            Section::Guidelines => o.guideline_descriptions,
            Section::Examples => o.code_examples,
            Section::TestRules => o.testing_rules,
            Section::Styles => o.style_properties,
            _ => true,
        }
    }
}

/// Inputs to one block repair prompt.
pub struct ReactContext<'a> {
    pub summary: Option<&'a str>,
    pub block: &'a CodeBlock,
    pub findings: &'a [Finding],
    /// JSON of the resolved styles for the block's elements.
    pub styles: &'a str,
    pub options: PromptOptions,
}

fn fence_lang(kind: BlockKind, block_id: &str) -> &'static str {
    match kind {
        BlockKind::HtmlStructural | BlockKind::HtmlPreamble => "html",
        BlockKind::JsFunction | BlockKind::JsClass => "javascript",
        BlockKind::CssDeclarationBlock => "css",
        BlockKind::Opaque => {
            let path = block_id.rsplit_once('#').map(|(p, _)| p).unwrap_or(block_id);
            match a11y_core::segment::FileKind::of(path) {
                a11y_core::segment::FileKind::Html => "html",
                a11y_core::segment::FileKind::Css => "css",
                a11y_core::segment::FileKind::Js => "javascript",
                a11y_core::segment::FileKind::Other => "",
            }
        }
    }
}

fn kind_name(kind: BlockKind) -> String {
    serde_json::to_value(kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

pub fn format_finding(f: &Finding) -> String {
    let level = serde_json::to_value(f.level).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    let mut line = format!("- {} [{}] {} (bytes {}..{}): {}", f.rule_id, level, f.path, f.span.start, f.span.end, f.message);
    if !f.evidence.is_empty() {
        let ev: Vec<String> = f.evidence.iter().map(|(k, v)| format!("{k}={v}")).collect();
        line.push_str(&format!(" [{}]", ev.join(", ")));
    }
    line
}

fn distinct_rules(findings: &[Finding]) -> Vec<&str> {
    let mut seen = BTreeSet::new();
    findings.iter().map(|f| f.rule_id.as_str()).filter(|r| seen.insert(*r)).collect()
}

fn guideline_lines(rules: &[&str]) -> String {
    rules
        .iter()
        .filter_map(|r| lookup(r))
        .map(|info| format!("- {} ({}): {}", info.id, info.techniques.join(", "), info.description))
        .collect::<Vec<_>>()
        .join("\n")
}

fn test_rule_lines(rules: &[&str]) -> String {
    rules
        .iter()
        .filter_map(|r| lookup(r))
        .map(|info| format!("- {}: {}", info.id, info.test_rule))
        .collect::<Vec<_>>()
        .join("\n")
}

fn example_lines(rules: &[&str]) -> Result<String, PromptError> {
    let mut parts = Vec::new();
    for (n, ex) in rules.iter().filter_map(|r| a11y_core::exemplars::get(r)).enumerate() {
        let description = lookup(ex.rule_id).map(|r| r.description).unwrap_or("");
        let index = (n + 1).to_string();
        parts.push(FEW_SHOT_ENTRY.render(&[
            ("index", &index),
            ("rule_id", ex.rule_id),
            ("description", description),
            ("correct", ex.correct.trim_end()),
            ("counter", ex.counter.trim_end()),
        ])?);
    }
    if parts.is_empty() {
        parts.push("(none available for these rules)".to_string());
    }
    Ok(parts.join("\n\n"))
}

/// The repair prompt split into labelled sections, in prompt order. Disabled
/// sections are absent.
pub fn react_sections(ctx: &ReactContext) -> Result<Vec<(Section, String)>, PromptError> {
    if ctx.findings.is_empty() {
        return Err(PromptError::NoFindings);
    }
    let block = ctx.block;
    if let Some(f) = ctx.findings.iter().find(|f| !block.span.contains(f.span.start)) {
        return Err(PromptError::ForeignFinding {
            rule_id: f.rule_id.clone(),
            offset: f.span.start,
            block_id: block.block_id.clone(),
        });
    }
    let code = block.text();
    if code.is_empty() {
        return Err(PromptError::EmptyCode);
    }
    let rules = distinct_rules(ctx.findings);
    let findings: Vec<String> = ctx.findings.iter().map(format_finding).collect();
    let mut out = vec![(Section::Persona, fixed(&REACT_PERSONA))];
    if let Some(summary) = ctx.summary.filter(|s| !s.trim().is_empty()) {
        out.push((Section::Summary, REACT_SUMMARY.render(&[("summary", summary)])?));
    }
    let o = &ctx.options;
    let mut push = |section: Section, text: String| {
        if section.enabled(o) {
            out.push((section, text));
        }
    };
    push(Section::Instructions, fixed(&REACT_A11Y));
    push(
        Section::Code,
        REACT_CODE.render(&[
            ("block_id", &block.block_id),
            ("kind", &kind_name(block.kind)),
            ("lang", fence_lang(block.kind, &block.block_id)),
            ("code", &code),
        ])?,
    );
    push(Section::Report, REACT_REPORT.render(&[("findings", &findings.join("\n"))])?);
    if o.guideline_descriptions {
        push(Section::Guidelines, REACT_GUIDELINES.render(&[("guidelines", &guideline_lines(&rules))])?);
    }
    if o.code_examples {
        push(Section::Examples, REACT_EXAMPLES.render(&[("examples", &example_lines(&rules)?)])?);
    }
    if o.testing_rules {
        push(Section::TestRules, REACT_TEST_RULES.render(&[("test_rules", &test_rule_lines(&rules))])?);
    }
    push(Section::Styles, REACT_STYLES.render(&[("styles", ctx.styles)])?);
    push(Section::Scaffold, fixed(&REACT_SCAFFOLD));
    Ok(out)
}

pub fn join_sections(sections: &[(Section, String)]) -> String {
    sections.iter().map(|(_, t)| t.as_str()).collect::<Vec<_>>().join("\n\n")
}

pub fn build_react_prompt(ctx: &ReactContext) -> Result<Vec<Message>, PromptError> {
    Ok(vec![Message::user(join_sections(&react_sections(ctx)?))])
}

/// Prompt asking the optimizer model to produce the report itself.
pub fn build_report_prompt(path: &str, code: &str, rules: &[&str], styles: &str) -> Result<Vec<Message>, PromptError> {
    if code.is_empty() {
        return Err(PromptError::EmptyCode);
    }
    Ok(vec![Message::user(REPORT_REQUEST.render(&[
        ("guidelines", &guideline_lines(rules)),
        ("test_rules", &test_rule_lines(rules)),
        ("styles", styles),
        ("path", path),
        ("code", code),
    ])?)])
}

/// Contents of the first fenced code block, without the fence lines.
pub fn extract_code(text: &str) -> Option<String> {
    let start = text.find("```")?;
    let after_fence = &text[start + 3..];
    let body_start = after_fence.find('\n')? + 1;
    let body = &after_fence[body_start..];
    let end = body.find("```")?;
    let code = &body[..end];
    Some(code.strip_suffix('\n').unwrap_or(code).to_string())
}

/// The three labelled parts of a ReAct reply.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReactReply {
    pub thought: String,
    pub action: Option<String>,
    pub observation: String,
}

pub fn parse_react_reply(text: &str) -> ReactReply {
    let find = |label: &str| text.find(label).map(|i| (i, i + label.len()));
    let thought = find("Thought:");
    let action = find("Action:");
    let observation = find("Observation:");
    let slice = |from: Option<(usize, usize)>, to: &[Option<(usize, usize)>]| -> String {
        let Some((_, s)) = from else { return String::new() };
        let e = to.iter().flatten().map(|(i, _)| *i).filter(|i| *i >= s).min().unwrap_or(text.len());
        text[s..e].trim().to_string()
    };
    let action_text = slice(action, &[observation]);
    ReactReply {
        thought: slice(thought, &[action, observation]),
        action: extract_code(if action.is_some() { &action_text } else { text }),
        observation: slice(observation, &[]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use a11y_core::exemplars::for_ruleset;
    use a11y_core::rules::Ruleset;

    #[test]
    fn naive_prompt_has_persona_and_no_accessibility_text() {
        let text = naive_text("A login page with a form").unwrap();
        assert!(text.contains("Act as a software developer"));
        let lower = text.to_lowercase();
        assert!(!lower.contains("accessib") && !lower.contains("wcag"));
        assert!(!text.contains("[["));
    }

    #[test]
    fn strategies_nest() {
        let s = "A page";
        let naive = naive_text(s).unwrap();
        let zero = zero_shot_text(s).unwrap();
        let few = few_shot_text(s, &for_ruleset(Ruleset::A)).unwrap();
        assert!(zero.starts_with(&naive) && few.starts_with(&zero));
        assert!(zero.contains("Make code compliant with WCAG accessibility rules. Avoid any violations."));
        assert_eq!(few.matches("\nIncorrect example:").count(), 34);
        assert_eq!(build_prompt(Strategy::FewShot, s, &[]), Err(PromptError::EmptyExemplars));
        assert_eq!(build_prompt(Strategy::Naive, " ", &[]), Err(PromptError::EmptySummary));
    }

    #[test]
    fn review_and_summary_prompts() {
        let code = "<p>\tx  </p>\n";
        let review = &build_review_prompt(code).unwrap()[0].content;
        assert!(review.contains("Return unchanged if compliant, fix issues if not"));
        assert!(review.contains(code));
        assert_eq!(build_review_prompt(""), Err(PromptError::EmptyCode));
        let summary = build_summary_prompt("a.html", code).unwrap()[0].content.to_lowercase();
        for facet in ["function name", "inputs", "outputs", "purpose", "workflow", "overview"] {
            assert!(summary.contains(facet), "{facet}");
        }
        assert!(!summary.contains("accessib") && !summary.contains("wcag"));
    }

    #[test]
    fn render_is_single_pass() {
        let out = REACT_SUMMARY.render(&[("summary", "{{summary}} [[x]]")]).unwrap();
        assert!(out.ends_with("{{summary}} [[x]]"));
        assert!(matches!(REACT_SUMMARY.render(&[]), Err(PromptError::MissingSlot { .. })));
    }

    #[test]
    fn quoted_fragments_are_marked() {
        assert_eq!(PERSONA.quoted_fragments(), vec!["Act as a software developer. Write code from a file description"]);
        assert_eq!(template_hashes().len(), ALL_TEMPLATES.len());
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
        assert_eq!("FeedA11y".parse::<Strategy>().unwrap(), Strategy::FeedA11y);
        assert_eq!("zeroshot".parse::<Strategy>().unwrap(), Strategy::ZeroShot);
    }

    #[test]
    fn reply_parsing() {
        let reply = "Thought: add alt\nAction:\n```html\n<img alt=\"x\">\n```\nObservation: fixed";
        let r = parse_react_reply(reply);
        assert_eq!(r.thought, "add alt");
        assert_eq!(r.action.as_deref(), Some("<img alt=\"x\">"));
        assert_eq!(r.observation, "fixed");
        assert_eq!(parse_react_reply("no code").action, None);
    }
}
