use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use a11y_core::metrics::{aggregate, percent_change, pooled, rate, RateSummary, RuleCount};
use a11y_core::rules::{evaluate_with, AccessibilityReport, Ruleset};
use a11y_core::segment::FileKind;
use a11y_core::Document;
use anyhow::{Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::{expand_paths, parse_ruleset, Format, Run, EXIT_TOOL_ERROR};

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// HTML/CSS files or directories (searched for HTML entry files).
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    #[arg(long, value_parser = parse_ruleset)]
    pub ruleset: Option<Ruleset>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Also write one JSON report per file into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScanEntry {
    pub file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<AccessibilityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn is_entry(p: &Path) -> bool {
    FileKind::of(&p.to_string_lossy()) == FileKind::Html
}

/// Load a page with its local stylesheets, or a lone stylesheet.
fn load(path: &Path) -> Result<(Document, Vec<u8>)> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let name = path.display().to_string();
    let doc = match FileKind::of(&name) {
        FileKind::Html => Document::load(path)?,
        _ => a11y_refine::source::load_document(&name, &bytes)?,
    };
    Ok((doc, bytes))
}

fn evaluate_files(run: &mut Run, files: &[PathBuf], ruleset: Ruleset) -> Vec<ScanEntry> {
    let rules = run.settings.rule_config();
    let results: Vec<(ScanEntry, Option<Vec<u8>>)> = run.install(|| {
        files
            .par_iter()
            .map(|p| {
                let file = p.display().to_string();
                match load(p) {
                    Ok((doc, bytes)) => {
                        let report = evaluate_with(&doc, ruleset, &rules);
                        let r = rate(&report);
                        (ScanEntry { file, report: Some(report), rate: Some(r), error: None }, Some(bytes))
                    }
                    Err(e) => (ScanEntry { file, report: None, rate: None, error: Some(format!("{e:#}")) }, None),
                }
            })
            .collect()
    });
    results
        .into_iter()
        .map(|(entry, bytes)| {
            if let Some(b) = bytes {
                run.input(Path::new(&entry.file), &b);
            }
            entry
        })
        .collect()
}

fn safe_name(file: &str) -> String {
    file.trim_start_matches(['.', '/']).replace(['/', '\\', ':'], "__")
}

pub fn scan(run: &mut Run, args: &ScanArgs) -> Result<(i32, serde_json::Value)> {
    let ruleset = args.ruleset.unwrap_or(run.settings.ruleset);
    let files = expand_paths(&args.paths, is_entry);
    let entries = evaluate_files(run, &files, ruleset);
    if let Some(dir) = &args.out {
        for e in &entries {
            let path = dir.join(format!("{}.json", safe_name(&e.file)));
            run.writer.write(&path, serde_json::to_string_pretty(e)?.as_bytes())?;
        }
    }
    let text = match args.format {
        Format::Json => serde_json::to_string_pretty(&entries)? + "\n",
        Format::Csv => render_csv(&entries)?,
        Format::Table => render_table(&entries),
    };
    run.emit(&text);

    let failed = entries.iter().filter(|e| e.error.is_some()).count();
    for e in entries.iter().filter(|e| e.error.is_some()) {
        eprintln!("{}: {}", e.file, e.error.as_deref().unwrap_or(""));
    }
    let violations = entries.iter().filter_map(|e| e.report.as_ref()).any(|r| r.counted().next().is_some());
    let code = if entries.is_empty() || failed == entries.len() {
        EXIT_TOOL_ERROR
    } else if violations {
        1
    } else {
        0
    };
    Ok((code, json!({ "ruleset": ruleset, "format": format!("{:?}", args.format).to_lowercase(), "rules": run.settings.rule_config() })))
}

#[derive(Serialize)]
struct FindingRow<'a> {
    file: &'a str,
    rule_id: &'a str,
    level: a11y_core::rules::Level,
    path: &'a str,
    start: usize,
    end: usize,
    stylesheet: Option<&'a str>,
    message: &'a str,
}

/// One row per reported finding, counted or not.
fn render_csv(entries: &[ScanEntry]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for e in entries {
        for f in e.report.iter().flat_map(|r| r.findings.iter()) {
            w.serialize(FindingRow {
                file: &e.file,
                rule_id: &f.rule_id,
                level: f.level,
                path: &f.path,
                start: f.span.start,
                end: f.span.end,
                stylesheet: f.stylesheet.as_deref(),
                message: &f.message,
            })?;
        }
    }
    Ok(String::from_utf8(w.into_inner().context("flushing CSV")?)?)
}

fn render_table(entries: &[ScanEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        match (&e.report, &e.rate, &e.error) {
            (Some(report), Some(r), _) => {
                let rate = r.rate.map(|x| format!("{x:.3}")).unwrap_or_else(|| "n/a".into());
                out.push_str(&format!("{}  counted={}  rate={} ({}/{})\n", e.file, report.counted().count(), rate, r.numerator, r.denominator));
                for f in report.counted() {
                    out.push_str(&format!("  {:<32} {:<40} {}\n", f.rule_id, f.path, f.message));
                }
            }
            (_, _, Some(err)) => out.push_str(&format!("{}  error: {err}\n", e.file)),
            _ => {}
        }
    }
    out
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// Source files, directories, or `.json` output of `scan`.
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    #[arg(long, value_parser = parse_ruleset)]
    pub ruleset: Option<Ruleset>,
    /// Sum numerators and denominators in the ALL row instead of averaging file rates.
    #[arg(long)]
    pub pooled: bool,
    /// Earlier `rate` output (CSV or JSON) or `scan` JSON to compare against.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RateRow {
    pub scope: String,
    pub rule_id: String,
    pub applicable: usize,
    pub violating: usize,
    pub rate: Option<f64>,
    pub pct_change: Option<f64>,
}

fn rows_for(scope: &str, summary: &RateSummary, overall_rate: Option<f64>) -> Vec<RateRow> {
    let mut rows = vec![RateRow {
        scope: scope.to_string(),
        rule_id: "*".to_string(),
        applicable: summary.denominator,
        violating: summary.numerator,
        rate: overall_rate,
        pct_change: None,
    }];
    rows.extend(summary.per_rule.iter().map(|(rule, c): (&String, &RuleCount)| RateRow {
        scope: scope.to_string(),
        rule_id: rule.clone(),
        applicable: c.applicable,
        violating: c.violating,
        rate: c.rate(),
        pct_change: None,
    }));
    rows
}

pub fn rate_rows(summaries: &[(String, RateSummary)], use_pooled: bool) -> Vec<RateRow> {
    let mut rows = Vec::new();
    for (scope, s) in summaries {
        rows.extend(rows_for(scope, s, s.rate));
    }
    let pages: Vec<RateSummary> = summaries.iter().map(|(_, s)| s.clone()).collect();
    let total = pooled(&pages);
    let overall = if use_pooled { total.rate } else { aggregate(&pages) };
    rows.extend(rows_for("ALL", &total, overall));
    rows
}

fn is_json(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Per-file summaries from saved `scan` output.
fn summaries_from_scan(run: &mut Run, path: &Path) -> Result<Vec<(String, RateSummary)>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    run.input(path, &bytes);
    let entries: Vec<ScanEntry> =
        serde_json::from_slice(&bytes).with_context(|| format!("{} is not scan output", path.display()))?;
    Ok(entries
        .into_iter()
        .filter_map(|e| {
            let summary = e.report.as_ref().map(rate).or(e.rate)?;
            Some((e.file, summary))
        })
        .collect())
}

/// Rows of an earlier run: `rate` CSV, `rate` JSON, or `scan` JSON.
fn read_baseline(run: &mut Run, path: &Path, use_pooled: bool) -> Result<Vec<RateRow>> {
    if !is_json(path) {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        run.input(path, &bytes);
        let mut reader = csv::Reader::from_reader(bytes.as_slice());
        return reader.deserialize().map(|r| r.context("malformed rate CSV row")).collect();
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(rows) = serde_json::from_str::<Vec<RateRow>>(&text) {
        run.input(path, text.as_bytes());
        return Ok(rows);
    }
    Ok(rate_rows(&summaries_from_scan(run, path)?, use_pooled))
}

fn render_rows(rows: &[RateRow], format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(rows)? + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in rows {
                w.serialize(row)?;
            }
            String::from_utf8(w.into_inner().context("flushing CSV")?)?
        }
        Format::Table => {
            let cell = |x: Option<f64>, pct: bool| match x {
                Some(v) if pct => format!("{v:+.1}%"),
                Some(v) => format!("{v:.3}"),
                None => "-".to_string(),
            };
            let width = rows.iter().map(|r| r.scope.len()).max().unwrap_or(5).max(5);
            let mut out = format!("{:<width$}  {:<32} {:>10} {:>9} {:>7} {:>9}\n", "scope", "rule", "applicable", "violating", "rate", "change");
            for r in rows {
                out.push_str(&format!(
                    "{:<width$}  {:<32} {:>10} {:>9} {:>7} {:>9}\n",
                    r.scope,
                    r.rule_id,
                    r.applicable,
                    r.violating,
                    cell(r.rate, false),
                    cell(r.pct_change, true)
                ));
            }
            out
        }
    })
}

pub fn rate_cmd(run: &mut Run, args: &RateArgs) -> Result<(i32, serde_json::Value)> {
    let ruleset = args.ruleset.unwrap_or(run.settings.ruleset);
    let (saved, sources): (Vec<PathBuf>, Vec<PathBuf>) = args.paths.iter().cloned().partition(|p| is_json(p));
    let mut summaries = Vec::new();
    for p in &saved {
        summaries.extend(summaries_from_scan(run, p)?);
    }
    if !sources.is_empty() {
        let files = expand_paths(&sources, is_entry);
        for e in evaluate_files(run, &files, ruleset) {
            match e.rate {
                Some(r) => summaries.push((e.file, r)),
                None => eprintln!("{}: {}", e.file, e.error.as_deref().unwrap_or("")),
            }
        }
    }
    let mut rows = rate_rows(&summaries, args.pooled);
    if let Some(b) = &args.baseline {
        let base: BTreeMap<(String, String), Option<f64>> =
            read_baseline(run, b, args.pooled)?.into_iter().map(|r| ((r.scope, r.rule_id), r.rate)).collect();
        for row in &mut rows {
            if let (Some(Some(old)), Some(new)) = (base.get(&(row.scope.clone(), row.rule_id.clone())), row.rate) {
                row.pct_change = percent_change(new, *old);
            }
        }
    }
    let text = render_rows(&rows, args.format)?;
    match &args.out {
        Some(p) => run.writer.write(p, text.as_bytes())?,
        None => run.emit(&text),
    }
    let code = if summaries.is_empty() { EXIT_TOOL_ERROR } else { 0 };
    Ok((code, json!({ "ruleset": ruleset, "pooled": args.pooled, "format": format!("{:?}", args.format).to_lowercase() })))
}
