use std::path::PathBuf;

use a11y_core::exemplars::for_ruleset;
use a11y_core::rules::Ruleset;
use a11y_core::segment::{block_at, reassemble, segment, BlockSummary};
use a11y_core::style::StyleResolver;
use a11y_core::SourceSpan;
use a11y_refine::prompts::{build_prompt, build_react_prompt, build_review_prompt, ReactContext, Strategy};
use a11y_refine::source::{evaluate_source, load_document};
use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};
use serde_json::json;

use crate::{parse_ruleset, parse_strategy, OptionFlags, Run};

fn read(run: &mut Run, path: &PathBuf) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    run.input(path, &bytes);
    Ok(bytes)
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    pub file: PathBuf,
    /// Include each block's content in the output.
    #[arg(long)]
    pub content: bool,
}

pub fn segment_cmd(run: &mut Run, args: &SegmentArgs) -> Result<(i32, serde_json::Value)> {
    let bytes = read(run, &args.file)?;
    let name = args.file.display().to_string();
    let blocks = segment(&name, &bytes);
    let round_trip = reassemble(&blocks)? == bytes;
    let listing: Vec<serde_json::Value> = blocks
        .iter()
        .map(|b| {
            let mut v = serde_json::to_value(BlockSummary::from(b)).expect("summary serializes");
            if args.content {
                v["content"] = json!(b.text());
            }
            v
        })
        .collect();
    let out = json!({ "file": name, "round_trip": round_trip, "blocks": listing });
    run.emit(&(serde_json::to_string_pretty(&out)? + "\n"));
    Ok((if round_trip { 0 } else { 1 }, json!({ "content": args.content })))
}

#[derive(Debug, Args)]
pub struct StylesArgs {
    pub file: PathBuf,
    /// List elements without any styled property too.
    #[arg(long)]
    pub all: bool,
}

pub fn styles_cmd(run: &mut Run, args: &StylesArgs) -> Result<(i32, serde_json::Value)> {
    let bytes = read(run, &args.file)?;
    let name = args.file.display().to_string();
    let doc = if name.ends_with(".css") {
        load_document(&name, &bytes)?
    } else {
        a11y_core::Document::load(&args.file)?
    };
    let styles = StyleResolver::new(&doc);
    let rows = styles.mapping(|i| i != 0 && (args.all || !styles.style(i).is_empty()));
    run.emit(&(serde_json::to_string_pretty(&rows)? + "\n"));
    Ok((0, json!({ "all": args.all })))
}

#[derive(Debug, Subcommand)]
pub enum PromptsCommand {
    /// Print the assembled prompt for a strategy.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Strategy,
    /// Catalog whose exemplars a few-shot prompt embeds, or the ruleset a
    /// feeda11y report is computed with.
    #[arg(long, value_parser = parse_ruleset, default_value = "A")]
    pub ruleset: Ruleset,
    #[arg(long, conflicts_with = "summary_file")]
    pub summary: Option<String>,
    #[arg(long)]
    pub summary_file: Option<PathBuf>,
    /// Code to review (self-criticism) or repair (feeda11y).
    #[arg(long)]
    pub code: Option<PathBuf>,
    /// Ordinal of the block to repair; defaults to the first with findings.
    #[arg(long)]
    pub block: Option<usize>,
    #[command(flatten)]
    pub flags: OptionFlags,
}

pub fn render_cmd(run: &mut Run, args: &RenderArgs) -> Result<(i32, serde_json::Value)> {
    let summary = match (&args.summary, &args.summary_file) {
        (Some(s), _) => Some(s.clone()),
        (None, Some(p)) => Some(String::from_utf8_lossy(&read(run, p)?).into_owned()),
        (None, None) => None,
    };
    let mut parts = Vec::new();
    match args.strategy {
        Strategy::FeedA11y => {
            let Some(path) = &args.code else { bail!("--code is required for the feeda11y prompt") };
            let bytes = read(run, path)?;
            let name = path.display().to_string();
            let report = evaluate_source(&name, &bytes, args.ruleset, &run.settings.rule_config())?;
            let blocks = segment(&name, &bytes);
            let target = match args.block {
                Some(b) if b < blocks.len() => b,
                Some(b) => bail!("{name} has {} blocks, no block {b}", blocks.len()),
                None => report
                    .counted()
                    .find_map(|f| block_at(&blocks, f.span.start))
                    .context("no counted findings to build a repair prompt from")?,
            };
            let block = &blocks[target];
            let findings: Vec<_> = report
                .counted()
                .filter(|f| block_at(&blocks, f.span.start) == Some(target))
                .cloned()
                .collect();
            let doc = load_document(&name, &bytes)?;
            let styles = StyleResolver::new(&doc);
            let span: SourceSpan = block.span;
            let rows = styles.mapping(|i| i != 0 && span.contains(doc.element(i).span.start));
            let styles_json = serde_json::to_string(&rows)?;
            let ctx = ReactContext {
                summary: summary.as_deref(),
                block,
                findings: &findings,
                styles: &styles_json,
                options: args.flags.options(),
            };
            parts.extend(build_react_prompt(&ctx)?);
        }
        strategy => {
            let summary = summary.context("--summary or --summary-file is required")?;
            let exemplars = for_ruleset(args.ruleset);
            parts.extend(build_prompt(strategy, &summary, &exemplars)?);
            if strategy == Strategy::SelfCriticism {
                if let Some(p) = &args.code {
                    let code = String::from_utf8_lossy(&read(run, p)?).into_owned();
                    parts.extend(build_review_prompt(&code)?);
                }
            }
        }
    }
    let text: Vec<String> = parts.iter().map(|m| m.content.clone()).collect();
    run.emit(&(text.join("\n\n----- next message -----\n\n") + "\n"));
    Ok((0, json!({ "strategy": args.strategy, "ruleset": args.ruleset, "options": args.flags.options() })))
}
