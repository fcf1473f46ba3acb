use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use a11y_core::metrics::{mean, percent_change, RuleCount};
use a11y_core::rules::Ruleset;
use a11y_refine::prompts::Strategy;
use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;
use serde_json::json;

use crate::manifest::{RateRecord, RunManifest};
use crate::{Format, Run};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub corpus: String,
    pub cells: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerRuleChange {
    pub rule_id: String,
    pub strategy: String,
    pub rate: Option<f64>,
    pub baseline_rate: Option<f64>,
    pub pct_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub eval_ruleset: Ruleset,
    pub strategies: Vec<String>,
    pub rows: Vec<Row>,
    /// Unweighted mean of each column's defined cells.
    pub avg: Vec<Option<f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub per_rule: Vec<PerRuleChange>,
}

fn strategy_order(name: &str) -> (usize, String) {
    let pos = Strategy::ALL.iter().position(|s| s.as_str() == name).unwrap_or(Strategy::ALL.len());
    (pos, name.to_string())
}

/// Rows are corpora, columns strategies, plus an AVG row. Records sharing a
/// corpus and strategy are merged. Mixed evaluation rulesets are refused.
pub fn build_table(records: &[RateRecord]) -> Result<Table> {
    let Some(first) = records.first() else {
        bail!("no results to tabulate");
    };
    let rulesets: BTreeSet<Ruleset> = records.iter().map(|r| r.eval_ruleset).collect();
    if rulesets.len() > 1 {
        bail!("results were evaluated with different rulesets ({rulesets:?}); compare like with like");
    }
    let mut merged: BTreeMap<(String, String), RateRecord> = BTreeMap::new();
    for r in records {
        match merged.get_mut(&(r.corpus.clone(), r.strategy.clone())) {
            Some(existing) => existing.merge(r),
            None => {
                merged.insert((r.corpus.clone(), r.strategy.clone()), r.clone());
            }
        }
    }
    let mut strategies: Vec<String> = merged.keys().map(|(_, s)| s.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    strategies.sort_by_key(|s| strategy_order(s));
    let corpora: BTreeSet<String> = merged.keys().map(|(c, _)| c.clone()).collect();
    let rows: Vec<Row> = corpora
        .iter()
        .map(|c| Row {
            corpus: c.clone(),
            cells: strategies.iter().map(|s| merged.get(&(c.clone(), s.clone())).and_then(|r| r.rate)).collect(),
        })
        .collect();
    let avg = (0..strategies.len()).map(|i| mean(rows.iter().map(|r| r.cells[i]))).collect();
    Ok(Table { eval_ruleset: first.eval_ruleset, strategies, rows, avg, per_rule: Vec::new() })
}

/// Per-rule pooled rates of every strategy against `baseline`.
pub fn per_rule_changes(records: &[RateRecord], baseline: &str) -> Vec<PerRuleChange> {
    let mut pooled: BTreeMap<String, BTreeMap<String, RuleCount>> = BTreeMap::new();
    for r in records {
        let by_rule = pooled.entry(r.strategy.clone()).or_default();
        for (rule, c) in &r.per_rule {
            let e = by_rule.entry(rule.clone()).or_default();
            e.violating += c.violating;
            e.applicable += c.applicable;
        }
    }
    let Some(base) = pooled.get(baseline).cloned() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut strategies: Vec<&String> = pooled.keys().filter(|s| s.as_str() != baseline).collect();
    strategies.sort_by_key(|s| strategy_order(s));
    for (rule, b) in &base {
        for s in &strategies {
            let rate = pooled[*s].get(rule).and_then(|c| c.rate());
            let baseline_rate = b.rate();
            out.push(PerRuleChange {
                rule_id: rule.clone(),
                strategy: (*s).clone(),
                rate,
                baseline_rate,
                pct_change: rate.zip(baseline_rate).and_then(|(r, b)| percent_change(r, b)),
            });
        }
    }
    out
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
}

pub fn render(table: &Table, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(table)? + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["corpus".to_string()];
            header.extend(table.strategies.iter().cloned());
            w.write_record(&header)?;
            for r in &table.rows {
                let mut rec = vec![r.corpus.clone()];
                rec.extend(r.cells.iter().map(|c| c.map(|v| v.to_string()).unwrap_or_default()));
                w.write_record(&rec)?;
            }
            let mut avg = vec!["AVG".to_string()];
            avg.extend(table.avg.iter().map(|c| c.map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&avg)?;
            let mut text = String::from_utf8(w.into_inner().context("flushing CSV")?)?;
            if !table.per_rule.is_empty() {
                let mut w = csv::Writer::from_writer(Vec::new());
                for c in &table.per_rule {
                    w.serialize(c)?;
                }
                text.push('\n');
                text.push_str(&String::from_utf8(w.into_inner().context("flushing CSV")?)?);
            }
            text
        }
        Format::Table => {
            let width = table.rows.iter().map(|r| r.corpus.len()).max().unwrap_or(0).max(7);
            let col = table.strategies.iter().map(|s| s.len()).max().unwrap_or(0).max(6);
            let mut out = format!("Inaccessibility rate (evaluated with ruleset {})\n", table.eval_ruleset);
            out.push_str(&format!("{:<width$}", "corpus"));
            for s in &table.strategies {
                out.push_str(&format!("  {s:>col$}"));
            }
            out.push('\n');
            let line = |out: &mut String, name: &str, cells: &[Option<f64>]| {
                out.push_str(&format!("{name:<width$}"));
                for c in cells {
                    out.push_str(&format!("  {:>col$}", cell(*c)));
                }
                out.push('\n');
            };
            for r in &table.rows {
                line(&mut out, &r.corpus, &r.cells);
            }
            line(&mut out, "AVG", &table.avg);
            if !table.per_rule.is_empty() {
                out.push_str("\nPer-rule change against the baseline\n");
                for c in &table.per_rule {
                    let pct = c.pct_change.map(|p| format!("{p:+.1}%")).unwrap_or_else(|| "-".into());
                    out.push_str(&format!(
                        "  {:<32} {:<16} {:>7} vs {:>7}  {pct}\n",
                        c.rule_id,
                        c.strategy,
                        cell(c.rate),
                        cell(c.baseline_rate)
                    ));
                }
            }
            out
        }
    })
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(required = true)]
    pub manifests: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    /// Strategy the per-rule appendix compares against.
    #[arg(long, default_value = "naive")]
    pub baseline: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn report_cmd(run: &mut Run, args: &ReportArgs) -> Result<(i32, serde_json::Value)> {
    let mut records = Vec::new();
    for p in &args.manifests {
        let bytes = std::fs::read(p).with_context(|| format!("reading {}", p.display()))?;
        run.input(p, &bytes);
        records.extend(RunManifest::load(p)?.results);
    }
    let mut table = build_table(&records)?;
    table.per_rule = per_rule_changes(&records, &args.baseline);
    let text = render(&table, args.format)?;
    match &args.out {
        Some(p) => run.writer.write(p, text.as_bytes())?,
        None => run.emit(&text),
    }
    Ok((0, json!({ "format": format!("{:?}", args.format).to_lowercase(), "baseline": args.baseline })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::PageRate;

    fn rec(corpus: &str, strategy: &str, rs: Ruleset, rate: f64) -> RateRecord {
        RateRecord {
            corpus: corpus.into(),
            strategy: strategy.into(),
            eval_ruleset: rs,
            rate: Some(rate),
            pages: vec![PageRate { file: format!("{corpus}.html"), rate: Some(rate) }],
            per_rule: BTreeMap::new(),
        }
    }

    #[test]
    fn two_strategies_one_corpus() {
        let t = build_table(&[rec("p", "feeda11y", Ruleset::A, 0.2), rec("p", "naive", Ruleset::A, 0.4)]).unwrap();
        assert_eq!(t.strategies, vec!["naive", "feeda11y"]);
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.avg, vec![Some(0.4), Some(0.2)]);
    }

    #[test]
    fn avg_is_column_mean() {
        let t = build_table(&[rec("a", "naive", Ruleset::A, 0.2), rec("b", "naive", Ruleset::A, 0.5)]).unwrap();
        assert!((t.avg[0].unwrap() - 0.35).abs() < 1e-12);
    }

    #[test]
    fn mixed_rulesets_are_refused() {
        assert!(build_table(&[rec("a", "naive", Ruleset::A, 0.2), rec("a", "few-shot", Ruleset::Q, 0.5)]).is_err());
    }
}
