//! The refinement loop: generate once without accessibility instructions,
//! then repeatedly evaluate, repair the blocks that carry findings, and
//! patch them back until the file stops changing or the round budget runs out.

use std::collections::{BTreeMap, BTreeSet};

use a11y_core::css::parse_blocks;
use a11y_core::dom::Node;
use a11y_core::exemplars::for_ruleset;
use a11y_core::html::parse_html_str;
use a11y_core::metrics::{rate, RateSummary};
use a11y_core::rules::{catalog, AccessibilityReport, Finding, Level, RuleConfig, Ruleset};
use a11y_core::segment::{block_at, reassemble, segment, BlockKind, CodeBlock, FileKind};
use a11y_core::style::StyleResolver;
use a11y_core::{Document, SourceSpan};
use serde::{Deserialize, Serialize};

use crate::gateway::{GatewayError, GenerationRequest, TextBackend};
use crate::hashing::sha256_hex;
use crate::oracle::OracleRewriter;
use crate::prompts::{
    build_prompt, build_react_prompt, build_report_prompt, build_review_prompt, extract_code, parse_react_reply,
    template_hashes, PromptError, PromptOptions, ReactContext, Strategy,
};
use crate::source::{evaluate_source, load_document};

pub const DEFAULT_MAX_ROUNDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportSource {
    /// Built-in rule engine on the optimization ruleset.
    #[default]
    Engine,
    /// Ask the optimizer model for the report.
    Model,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefineConfig {
    pub optimize: Ruleset,
    pub eval: Ruleset,
    pub allow_same_ruleset: bool,
    pub max_rounds: usize,
    pub report_source: ReportSource,
    pub options: PromptOptions,
    #[serde(skip)]
    pub rules: RuleConfig,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            optimize: Ruleset::Q,
            eval: Ruleset::A,
            allow_same_ruleset: false,
            max_rounds: DEFAULT_MAX_ROUNDS,
            report_source: ReportSource::Engine,
            options: PromptOptions::default(),
            rules: RuleConfig::default(),
        }
    }
}

impl RefineConfig {
    pub fn check(&self) -> Result<(), SessionError> {
        if self.optimize == self.eval && !self.allow_same_ruleset {
            return Err(SessionError::SameRuleset(self.optimize));
        }
        Ok(())
    }
}

pub enum Optimizer<'a> {
    Model(&'a dyn TextBackend),
    Oracle(OracleRewriter),
}

impl Optimizer<'_> {
    pub fn id(&self) -> String {
        match self {
            Optimizer::Model(b) => b.id(),
            Optimizer::Oracle(o) => o.id(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum SessionInput {
    Code { path: String, code: Vec<u8> },
    /// A file description; the code is generated first.
    Summary { path: String, summary: String },
}

impl SessionInput {
    pub fn path(&self) -> &str {
        match self {
            SessionInput::Code { path, .. } | SessionInput::Summary { path, .. } => path,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("optimization and evaluation both use ruleset {0}; pass the same-ruleset override to allow this")]
    SameRuleset(Ruleset),
    #[error("a summary input needs a generator backend")]
    NoGenerator,
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("initial generation failed: {0}")]
    Generation(GatewayError),
    #[error("{0}")]
    Core(#[from] a11y_core::CoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    MaxRounds,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactRecord {
    pub thought: String,
    /// Replacement block content that was patched in (or the original when rejected).
    pub action: String,
    pub observation: String,
    pub resolved: bool,
    pub attempts: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prompt_sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub block_id: String,
    pub rules: Vec<String>,
    pub react: ReactRecord,
    pub patched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// File content the round started from.
    pub code: String,
    pub input_sha256: String,
    pub report: AccessibilityReport,
    pub blocks: Vec<BlockRecord>,
    pub output_sha256: String,
    /// Counted findings per rule before and after the round.
    pub violations_before: BTreeMap<String, usize>,
    pub violations_after: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementSession {
    pub path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    pub optimizer: String,
    pub optimize_ruleset: Ruleset,
    pub eval_ruleset: Ruleset,
    pub allow_same_ruleset: bool,
    pub max_rounds: usize,
    pub options: PromptOptions,
    pub report_source: ReportSource,
    pub template_sha256: BTreeMap<String, String>,
    pub rounds: Vec<RoundRecord>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub initial_code: String,
    pub final_code: String,
    pub final_sha256: String,
    pub initial_rate: RateSummary,
    pub final_rate: RateSummary,
}

impl RefinementSession {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("session serializes")
    }
}

/// Generate code from a summary with the naive prompt, and take the first
/// fenced block of the reply (or the whole reply when there is none).
pub fn initial_generate(summary: &str, generator: &dyn TextBackend) -> Result<String, SessionError> {
    let request = GenerationRequest::new(build_prompt(Strategy::Naive, summary, &[])?);
    let reply = generator.generate(&request).map_err(SessionError::Generation)?;
    Ok(extract_code(&reply).unwrap_or(reply))
}

fn counted_per_rule(report: &AccessibilityReport) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for f in report.counted() {
        *out.entry(f.rule_id.clone()).or_default() += 1;
    }
    out
}

/// Whether a finding's span indexes this file rather than some linked sheet.
fn spans_this_file(path: &str, f: &Finding) -> bool {
    f.stylesheet.as_deref().is_none_or(|s| s == path)
}

fn count_stray(doc: &Document) -> usize {
    doc.elements()
        .flat_map(|e| e.children.iter())
        .filter(|n| matches!(n, Node::StrayEndTag(_)))
        .count()
}

/// A replacement is accepted when it still parses as the same kind of block.
fn acceptable(old: &CodeBlock, new: &str) -> bool {
    if new.trim().is_empty() {
        return false;
    }
    match old.kind {
        BlockKind::HtmlStructural | BlockKind::HtmlPreamble => {
            let (a, b) = (parse_html_str(&old.text()), parse_html_str(new));
            let first = |d: &Document| d.elements().nth(1).map(|e| e.tag.clone());
            count_stray(&b) <= count_stray(&a) && (old.kind == BlockKind::HtmlPreamble || first(&a) == first(&b))
        }
        BlockKind::CssDeclarationBlock => {
            let broken = |t: &str| parse_blocks(t, 0).iter().filter(|b| b.is_opaque()).count();
            broken(new) <= broken(&old.text())
        }
        _ => true,
    }
}

fn styles_json(doc: &Document, span: SourceSpan) -> String {
    let styles = StyleResolver::new(doc);
    let rows = styles.mapping(|i| i != 0 && span.contains(doc.element(i).span.start));
    serde_json::to_string(&rows).unwrap_or_else(|_| "[]".into())
}

/// Parse `rule_id | line | message` rows from a model-written report.
pub fn parse_model_report(path: &str, code: &str, ruleset: Ruleset, reply: &str) -> AccessibilityReport {
    let known: BTreeSet<&str> = catalog(ruleset).iter().map(|r| r.id).collect();
    let mut line_starts = vec![0];
    line_starts.extend(code.match_indices('\n').map(|(i, _)| i + 1));
    let level = match ruleset {
        Ruleset::A => Level::Violation,
        Ruleset::Q => Level::Failed,
    };
    let mut findings = Vec::new();
    for row in reply.lines() {
        let parts: Vec<&str> = row.trim().trim_matches('`').splitn(3, '|').map(str::trim).collect();
        let [rule, line, message] = parts[..] else { continue };
        let rule = rule.trim_start_matches(['-', '*', ' ']);
        let Some(&id) = known.get(rule) else { continue };
        let Ok(n) = line.parse::<usize>() else { continue };
        let Some(&start) = line_starts.get(n.saturating_sub(1)) else { continue };
        let end = code[start..].find('\n').map(|e| start + e).unwrap_or(code.len());
        findings.push(Finding {
            rule_id: id.to_string(),
            doc_index: 0,
            path: String::new(),
            span: SourceSpan::new(start, end.max(start)),
            stylesheet: None,
            message: message.to_string(),
            evidence: BTreeMap::new(),
            level,
        });
    }
    AccessibilityReport { ruleset, file: path.to_string(), findings, census: BTreeMap::new() }
}

struct RoundOutcome {
    record: RoundRecord,
    output: Vec<u8>,
    error: Option<String>,
}

fn optimize_round(
    round: usize,
    path: &str,
    code: &[u8],
    summary: Option<&str>,
    optimizer: &Optimizer,
    cfg: &RefineConfig,
) -> Result<RoundOutcome, String> {
    let text = String::from_utf8_lossy(code).into_owned();
    let doc = load_document(path, code).map_err(|e| e.to_string())?;
    let engine = a11y_core::rules::evaluate_with(&doc, cfg.optimize, &cfg.rules);
    let report = match (cfg.report_source, optimizer) {
        (ReportSource::Model, Optimizer::Model(backend)) => {
            let rules: Vec<&str> = catalog(cfg.optimize).iter().map(|r| r.id).collect();
            let styles = styles_json(&doc, SourceSpan::new(0, doc.source.len()));
            let request = GenerationRequest::new(
                build_report_prompt(path, &text, &rules, &styles).map_err(|e| e.to_string())?,
            );
            let reply = backend.generate(&request).map_err(|e| format!("round {round}: report: {e}"))?;
            parse_model_report(path, &text, cfg.optimize, &reply)
        }
        _ => engine.clone(),
    };

    let blocks = segment(path, code);
    let mut groups: BTreeMap<usize, Vec<Finding>> = BTreeMap::new();
    for f in report.counted().filter(|f| spans_this_file(path, f)) {
        if let Some(b) = block_at(&blocks, f.span.start) {
            groups.entry(b).or_default().push(f.clone());
        }
    }

    let mut replacements: BTreeMap<usize, (ReactRecord, String)> = BTreeMap::new();
    match optimizer {
        Optimizer::Oracle(oracle) => {
            for (&b, findings) in &groups {
                let rewritten = oracle.rewrite(path, code, findings);
                let delta = rewritten.len() as isize - code.len() as isize;
                let span = blocks[b].span;
                let end = (span.end as isize + delta) as usize;
                let content = String::from_utf8_lossy(&rewritten[span.start..end]).into_owned();
                let supported: BTreeSet<&str> = findings
                    .iter()
                    .map(|f| f.rule_id.as_str())
                    .filter(|r| OracleRewriter::supports(r))
                    .collect();
                let react = ReactRecord {
                    thought: format!("Apply deterministic fixes for: {}", supported.into_iter().collect::<Vec<_>>().join(", ")),
                    action: content.clone(),
                    observation: String::new(),
                    resolved: false,
                    attempts: 1,
                    prompt_sha256: None,
                };
                replacements.insert(b, (react, content));
            }
        }
        Optimizer::Model(backend) => {
            let results: Vec<(usize, RepairResult)> = std::thread::scope(|scope| {
                let handles: Vec<_> = groups
                    .iter()
                    .map(|(&b, findings)| {
                        let block = &blocks[b];
                        let doc = &doc;
                        scope.spawn(move || {
                            let styles = styles_json(doc, block.span);
                            let ctx = ReactContext { summary, block, findings, styles: &styles, options: cfg.options };
                            (b, repair_block(*backend, &ctx, round))
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("repair thread panicked")).collect()
            });
            for (b, result) in results {
                replacements.insert(b, result?);
            }
        }
    }

    let mut patched_blocks = blocks.clone();
    for (&b, (_, content)) in &replacements {
        patched_blocks[b].content = content.clone().into_bytes();
    }
    let output = reassemble(&patched_blocks).map_err(|e| e.to_string())?;

    // Re-check: a block is resolved when none of its rules still fire inside it.
    let after = evaluate_source(path, &output, cfg.optimize, &cfg.rules).map_err(|e| e.to_string())?;
    let mut new_spans = Vec::with_capacity(patched_blocks.len());
    let mut pos = 0;
    for b in &patched_blocks {
        new_spans.push(SourceSpan::new(pos, pos + b.content.len()));
        pos += b.content.len();
    }
    let mut records = Vec::new();
    for (b, findings) in &groups {
        let (mut react, content) = replacements.remove(b).expect("every group has a replacement");
        let rules: BTreeSet<String> = findings.iter().map(|f| f.rule_id.clone()).collect();
        let remaining: Vec<&Finding> = after
            .counted()
            .filter(|f| spans_this_file(path, f) && rules.contains(&f.rule_id) && new_spans[*b].contains(f.span.start))
            .collect();
        react.resolved = remaining.is_empty();
        if react.observation.is_empty() {
            react.observation = if remaining.is_empty() {
                "Re-check: all reported violations in this block are resolved.".to_string()
            } else {
                let ids: BTreeSet<&str> = remaining.iter().map(|f| f.rule_id.as_str()).collect();
                format!("Re-check: still failing {}", ids.into_iter().collect::<Vec<_>>().join(", "))
            };
        }
        records.push(BlockRecord {
            block_id: blocks[*b].block_id.clone(),
            rules: rules.into_iter().collect(),
            patched: content.as_bytes() != blocks[*b].content.as_slice(),
            react,
        });
    }

    Ok(RoundOutcome {
        record: RoundRecord {
            round,
            code: text,
            input_sha256: sha256_hex(code),
            violations_before: counted_per_rule(&engine),
            violations_after: counted_per_rule(&after),
            report,
            blocks: records,
            output_sha256: sha256_hex(&output),
        },
        output,
        error: None,
    })
}

type RepairResult = Result<(ReactRecord, String), String>;

/// One ReAct exchange for a block, with a single retry on unusable output.
fn repair_block(backend: &dyn TextBackend, ctx: &ReactContext, round: usize) -> RepairResult {
    let messages = build_react_prompt(ctx).map_err(|e| e.to_string())?;
    let request = GenerationRequest::new(messages);
    let prompt_sha256 = Some(request.fingerprint());
    let original = ctx.block.text().into_owned();
    let mut last = None;
    for attempt in 1..=2 {
        let reply = backend
            .generate(&request)
            .map_err(|e| format!("round {round}, block {}: {e}", ctx.block.block_id))?;
        let parsed = parse_react_reply(&reply);
        if let Some(action) = parsed.action.as_deref().filter(|a| acceptable(ctx.block, a)) {
            // Keep the block's trailing whitespace so neighbouring blocks stay aligned.
            let trailing = &original[original.trim_end().len()..];
            let content = format!("{}{}", action.trim_end(), trailing);
            let record = ReactRecord {
                thought: parsed.thought,
                action: content.clone(),
                observation: parsed.observation,
                resolved: false,
                attempts: attempt,
                prompt_sha256: prompt_sha256.clone(),
            };
            return Ok((record, content));
        }
        last = Some(parsed);
    }
    let parsed = last.unwrap_or_default();
    Ok((
        ReactRecord {
            thought: parsed.thought,
            action: original.clone(),
            observation: "Replacement rejected twice; block left unchanged.".to_string(),
            resolved: false,
            attempts: 2,
            prompt_sha256,
        },
        original,
    ))
}

/// Run the whole loop. Configuration problems fail before any backend call;
/// a backend failure mid-loop ends the session with status `error`.
pub fn run(
    input: &SessionInput,
    generator: Option<&dyn TextBackend>,
    optimizer: &Optimizer,
    cfg: &RefineConfig,
) -> Result<RefinementSession, SessionError> {
    cfg.check()?;
    let path = input.path().to_string();
    let (summary, code) = match input {
        SessionInput::Code { code, .. } => (None, code.clone()),
        SessionInput::Summary { summary, .. } => {
            if summary.trim().is_empty() {
                return Err(PromptError::EmptySummary.into());
            }
            let generator = generator.ok_or(SessionError::NoGenerator)?;
            (Some(summary.clone()), initial_generate(summary, generator)?.into_bytes())
        }
    };
    let initial_rate = rate(&evaluate_source(&path, &code, cfg.eval, &cfg.rules)?);

    let mut rounds = Vec::new();
    let mut current = code.clone();
    let mut status = Status::MaxRounds;
    let mut error = None;
    for round in 1..=cfg.max_rounds {
        match optimize_round(round, &path, &current, summary.as_deref(), optimizer, cfg) {
            Ok(outcome) => {
                let unchanged = outcome.output == current;
                rounds.push(outcome.record);
                current = outcome.output;
                if let Some(e) = outcome.error {
                    status = Status::Error;
                    error = Some(e);
                    break;
                }
                if unchanged {
                    status = Status::Converged;
                    break;
                }
            }
            Err(e) => {
                status = Status::Error;
                error = Some(e);
                break;
            }
        }
    }
    let final_rate = rate(&evaluate_source(&path, &current, cfg.eval, &cfg.rules)?);

    Ok(RefinementSession {
        path,
        summary,
        generator: match input {
            SessionInput::Summary { .. } => generator.map(|g| g.id()),
            SessionInput::Code { .. } => None,
        },
        optimizer: optimizer.id(),
        optimize_ruleset: cfg.optimize,
        eval_ruleset: cfg.eval,
        allow_same_ruleset: cfg.allow_same_ruleset,
        max_rounds: cfg.max_rounds,
        options: cfg.options,
        report_source: cfg.report_source,
        template_sha256: template_hashes(),
        rounds,
        status,
        error,
        initial_code: String::from_utf8_lossy(&code).into_owned(),
        final_sha256: sha256_hex(&current),
        final_code: String::from_utf8_lossy(&current).into_owned(),
        initial_rate,
        final_rate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub strategy: Strategy,
    pub code: String,
    pub rate: RateSummary,
    /// Fingerprints of the prompts sent, in order.
    pub prompts: Vec<String>,
}

/// One of the prompting baselines. Few-shot embeds the exemplars of the
/// ruleset opposite to `eval`; self-criticism adds exactly one review call.
pub fn run_strategy(
    path: &str,
    summary: &str,
    strategy: Strategy,
    generator: &dyn TextBackend,
    reviewer: Option<&dyn TextBackend>,
    eval: Ruleset,
    rules: &RuleConfig,
) -> Result<StrategyOutcome, SessionError> {
    let exemplars = if strategy == Strategy::FewShot { for_ruleset(eval.other()) } else { Vec::new() };
    let request = GenerationRequest::new(build_prompt(strategy, summary, &exemplars)?);
    let mut prompts = vec![request.fingerprint()];
    let reply = generator.generate(&request).map_err(SessionError::Generation)?;
    let mut code = extract_code(&reply).unwrap_or(reply);
    if strategy == Strategy::SelfCriticism {
        let review = GenerationRequest::new(build_review_prompt(&code)?);
        prompts.push(review.fingerprint());
        let reply = reviewer.unwrap_or(generator).generate(&review).map_err(SessionError::Generation)?;
        code = extract_code(&reply).unwrap_or(reply);
    }
    let report = evaluate_source(path, code.as_bytes(), eval, rules)?;
    Ok(StrategyOutcome { strategy, rate: rate(&report), code, prompts })
}

/// Whether `path` is a kind of file the loop can segment meaningfully.
pub fn is_refinable(path: &str) -> bool {
    FileKind::of(path) != FileKind::Other
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_ruleset_is_rejected_without_override() {
        let cfg = RefineConfig { optimize: Ruleset::A, eval: Ruleset::A, ..Default::default() };
        assert!(matches!(cfg.check(), Err(SessionError::SameRuleset(Ruleset::A))));
        let cfg = RefineConfig { allow_same_ruleset: true, ..cfg };
        assert!(cfg.check().is_ok());
    }

    #[test]
    fn oracle_loop_converges() {
        let code = "<html><head></head><body><div><img src=\"cat.png\"></div><div><p>ok</p></div></body></html>";
        let input = SessionInput::Code { path: "p.html".into(), code: code.as_bytes().to_vec() };
        let cfg = RefineConfig { optimize: Ruleset::A, eval: Ruleset::Q, ..Default::default() };
        let s = run(&input, None, &Optimizer::Oracle(OracleRewriter::default()), &cfg).unwrap();
        assert_eq!(s.status, Status::Converged);
        assert!(s.rounds.len() <= 3);
        let supported_only = s.rounds[0].blocks.iter().filter(|b| b.rules.iter().all(|r| OracleRewriter::supports(r)));
        assert!(supported_only.clone().count() >= 1);
        assert!(supported_only.into_iter().all(|b| b.react.resolved), "{}", s.to_json());
        let last = &s.rounds.last().unwrap().violations_after;
        assert!(!last.contains_key("img_alt_valid") && !last.contains_key("html_lang_exists"));
        assert!(s.final_code.contains("<div><p>ok</p></div>"));
    }

    #[test]
    fn clean_code_converges_in_one_round() {
        let input = SessionInput::Code { path: "c.css".into(), code: b"p { font-size: 1rem }".to_vec() };
        let s = run(&input, None, &Optimizer::Oracle(OracleRewriter::default()), &RefineConfig::default()).unwrap();
        assert_eq!(s.status, Status::Converged);
        assert_eq!(s.rounds.len(), 1);
        assert!(s.rounds[0].blocks.is_empty());
    }

    #[test]
    fn model_report_rows_are_parsed() {
        let code = "<html>\n<img src=a.png>\n</html>";
        let r = parse_model_report("p.html", code, Ruleset::A, "img_alt_valid | 2 | missing alt\nbogus | 1 | x\n");
        assert_eq!(r.findings.len(), 1);
        assert_eq!(r.findings[0].span.slice(code), "<img src=a.png>");
    }

    #[test]
    fn replacement_validation() {
        let blocks = segment("p.html", b"<div><p>x</p></div>");
        assert!(acceptable(&blocks[0], "<div><p lang=en>x</p></div>"));
        assert!(!acceptable(&blocks[0], "<section>x</section>"));
        assert!(!acceptable(&blocks[0], "<div>x</div></span>"));
        assert!(!acceptable(&blocks[0], "  "));
    }
}
