use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use a11y_core::metrics::RateSummary;
use a11y_core::rules::Ruleset;
use a11y_refine::gateway::{LiveBackend, RecordingBackend, ReplayBackend, TextBackend};
use a11y_refine::prompts::Strategy;
use a11y_refine::session::{self, Optimizer, RefineConfig, ReportSource, SessionInput, Status};
use a11y_refine::OracleRewriter;
use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use crate::config::Settings;
use crate::manifest::RateRecord;
use crate::report::{build_table, render};
use crate::{expand_paths, parse_ruleset, parse_strategy, Format, OptionFlags, Run};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportSourceArg {
    Engine,
    Model,
}

/// Backend by name. `oracle` is not a text backend and yields `None`.
pub fn make_backend(settings: &Settings, kind: &str) -> Result<Option<Box<dyn TextBackend>>> {
    let transcript = || settings.transcript.clone().ok_or_else(|| anyhow!("backend {kind} needs a transcript path"));
    Ok(match kind {
        "oracle" => None,
        "live" => Some(Box::new(LiveBackend::from_env(settings.live_config())?)),
        "replay" => Some(Box::new(ReplayBackend::load(&transcript()?)?)),
        "record" => Some(Box::new(RecordingBackend::new(LiveBackend::from_env(settings.live_config())?, transcript()?))),
        other => bail!("unknown backend {other:?} (expected oracle, live, replay or record)"),
    })
}

fn is_summary_path(p: &Path) -> bool {
    matches!(p.extension().and_then(|e| e.to_str()), Some("txt" | "md"))
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    /// Code file to refine, or a file description (`.txt`/`.md`) to generate from.
    pub input: PathBuf,
    #[arg(long, value_parser = parse_strategy, default_value = "feeda11y")]
    pub strategy: Strategy,
    #[arg(long, value_parser = parse_ruleset)]
    pub optimize_ruleset: Option<Ruleset>,
    #[arg(long, value_parser = parse_ruleset)]
    pub eval_ruleset: Option<Ruleset>,
    /// Optimizer backend: oracle, replay, live or record.
    #[arg(long)]
    pub backend: Option<String>,
    /// Backend for the initial generation when it differs from `--backend`.
    #[arg(long)]
    pub generator_backend: Option<String>,
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[arg(long)]
    pub max_rounds: Option<usize>,
    /// Permit optimizing and evaluating with the same ruleset.
    #[arg(long)]
    pub allow_same_ruleset: bool,
    /// Treat the input as a description even without a `.txt`/`.md` extension.
    #[arg(long)]
    pub summary: bool,
    /// File name for generated code (default: input stem + `.html`).
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, value_enum, default_value = "engine")]
    pub report_source: ReportSourceArg,
    /// Corpus label for the result record (default: the input's directory name).
    #[arg(long)]
    pub corpus: Option<String>,
    #[arg(long, default_value = "refined")]
    pub out: PathBuf,
    #[command(flatten)]
    pub flags: OptionFlags,
}

fn apply_overrides(run: &mut Run, backend: &Option<String>, generator: &Option<String>, transcript: &Option<PathBuf>) {
    if let Some(b) = backend {
        run.settings.backend = b.clone();
    }
    if let Some(g) = generator {
        run.settings.generator_backend = Some(g.clone());
    }
    if let Some(t) = transcript {
        run.settings.transcript = Some(t.clone());
    }
}

fn corpus_label(input: &Path) -> String {
    input
        .parent()
        .and_then(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| ".".into())
}

pub fn refine_cmd(run: &mut Run, args: &RefineArgs) -> Result<(i32, serde_json::Value)> {
    apply_overrides(run, &args.backend, &args.generator_backend, &args.transcript);
    let s = run.settings.clone();
    let cfg = RefineConfig {
        optimize: args.optimize_ruleset.unwrap_or(s.optimize_ruleset),
        eval: args.eval_ruleset.unwrap_or(s.eval_ruleset),
        allow_same_ruleset: args.allow_same_ruleset,
        max_rounds: args.max_rounds.unwrap_or(s.max_rounds),
        report_source: match args.report_source {
            ReportSourceArg::Engine => ReportSource::Engine,
            ReportSourceArg::Model => ReportSource::Model,
        },
        options: args.flags.options(),
        rules: s.rule_config(),
    };
    // Configuration errors surface before any backend is built or called.
    if args.strategy == Strategy::FeedA11y {
        cfg.check()?;
    }

    let bytes = std::fs::read(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    run.input(&args.input, &bytes);
    let summary_mode = args.summary || is_summary_path(&args.input);
    let stem = args.input.file_stem().map(|x| x.to_string_lossy().into_owned()).unwrap_or_else(|| "output".into());
    let target = match (&args.target, summary_mode) {
        (Some(t), _) => t.clone(),
        (None, true) => format!("{stem}.html"),
        (None, false) => args.input.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or(stem.clone()),
    };
    let config = json!({
        "strategy": args.strategy,
        "backend": s.backend,
        "generator_backend": s.generator_backend,
        "refine": cfg,
        "target": target,
        "summary_mode": summary_mode,
    });
    let corpus = args.corpus.clone().unwrap_or_else(|| corpus_label(&args.input));

    let optimizer_backend = make_backend(&s, &s.backend)?;
    let generator_backend = match &s.generator_backend {
        Some(kind) => make_backend(&s, kind)?,
        None => None,
    };
    let generator: Option<&dyn TextBackend> = generator_backend.as_deref().or(optimizer_backend.as_deref());

    if args.strategy != Strategy::FeedA11y {
        if !summary_mode {
            bail!("strategy {} generates code from a description; pass a .txt/.md file or --summary", args.strategy);
        }
        let generator = generator.context("the oracle backend cannot generate code; choose replay, live or record")?;
        let summary = String::from_utf8_lossy(&bytes).into_owned();
        let outcome = session::run_strategy(&target, &summary, args.strategy, generator, None, cfg.eval, &cfg.rules)?;
        run.writer.write(&args.out.join(&target), outcome.code.as_bytes())?;
        run.writer.write(
            &args.out.join(format!("{stem}.{}.json", args.strategy)),
            (serde_json::to_string_pretty(&outcome)? + "\n").as_bytes(),
        )?;
        run.manifest.results.push(RateRecord::from_pages(&corpus, args.strategy.as_str(), cfg.eval, &[(target, outcome.rate)]));
        return Ok((0, config));
    }

    let input = if summary_mode {
        SessionInput::Summary { path: target.clone(), summary: String::from_utf8_lossy(&bytes).into_owned() }
    } else {
        SessionInput::Code { path: target.clone(), code: bytes }
    };
    let optimizer = match optimizer_backend.as_deref() {
        Some(b) => Optimizer::Model(b),
        None => Optimizer::Oracle(OracleRewriter::new(cfg.rules.clone())),
    };
    let session = session::run(&input, generator, &optimizer, &cfg)?;
    run.writer.write(&args.out.join(&target), session.final_code.as_bytes())?;
    run.writer.write(&args.out.join(format!("{stem}.session.json")), (session.to_json() + "\n").as_bytes())?;
    run.manifest.results.push(RateRecord::from_pages(&corpus, "feeda11y", cfg.eval, &[(target, session.final_rate.clone())]));
    eprintln!(
        "{}: {:?} after {} round(s), rate {} -> {}",
        session.path,
        session.status,
        session.rounds.len(),
        fmt_rate(&session.initial_rate),
        fmt_rate(&session.final_rate)
    );
    if let Some(e) = &session.error {
        eprintln!("error: {e}");
    }
    Ok((if session.status == Status::Error { 1 } else { 0 }, config))
}

fn fmt_rate(r: &RateSummary) -> String {
    r.rate.map(|x| format!("{x:.3}")).unwrap_or_else(|| "n/a".into())
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Directory of file descriptions (`.txt`/`.md`); subdirectories are projects.
    pub corpus: PathBuf,
    #[arg(long, value_parser = parse_ruleset)]
    pub eval_ruleset: Option<Ruleset>,
    #[arg(long, value_parser = parse_ruleset)]
    pub optimize_ruleset: Option<Ruleset>,
    /// Generator backend: replay, live or record.
    #[arg(long)]
    pub backend: Option<String>,
    /// Optimizer for feeda11y: `model` (the generator backend) or `oracle`.
    #[arg(long, default_value = "model")]
    pub optimizer: String,
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy)]
    pub strategies: Vec<Strategy>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    #[arg(long, default_value = "compare-out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub flags: OptionFlags,
}

fn project_of(root: &Path, file: &Path) -> String {
    let rel = file.strip_prefix(root).unwrap_or(file);
    let mut comps = rel.components();
    match (comps.next(), comps.next()) {
        (Some(first), Some(_)) => first.as_os_str().to_string_lossy().into_owned(),
        _ => root.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| ".".into()),
    }
}

pub fn compare_cmd(run: &mut Run, args: &CompareArgs) -> Result<(i32, serde_json::Value)> {
    apply_overrides(run, &args.backend, &None, &args.transcript);
    let s = run.settings.clone();
    let eval = args.eval_ruleset.unwrap_or(s.eval_ruleset);
    let cfg = RefineConfig {
        optimize: args.optimize_ruleset.unwrap_or(eval.other()),
        eval,
        max_rounds: s.max_rounds,
        options: args.flags.options(),
        rules: s.rule_config(),
        ..RefineConfig::default()
    };
    let strategies = if args.strategies.is_empty() { Strategy::ALL.to_vec() } else { args.strategies.clone() };
    if strategies.contains(&Strategy::FeedA11y) {
        cfg.check()?;
    }
    let generator = make_backend(&s, &s.backend)?.context("compare needs a text backend (replay, live or record)")?;
    let oracle = args.optimizer == "oracle";
    if !oracle && args.optimizer != "model" {
        bail!("--optimizer must be model or oracle");
    }

    let files = expand_paths(std::slice::from_ref(&args.corpus), is_summary_path);
    if files.is_empty() {
        bail!("no .txt/.md descriptions under {}", args.corpus.display());
    }
    let mut summaries = Vec::new();
    for f in &files {
        let bytes = std::fs::read(f).with_context(|| format!("reading {}", f.display()))?;
        run.input(f, &bytes);
        summaries.push((f.clone(), String::from_utf8_lossy(&bytes).into_owned()));
    }

    type Cell = (String, Strategy, String, Result<(RateSummary, String)>);
    let generator_ref: &dyn TextBackend = generator.as_ref();
    let cells: Vec<Cell> = run.install(|| {
        summaries
            .par_iter()
            .flat_map_iter(|(file, summary)| {
                let project = project_of(&args.corpus, file);
                let rel = file.strip_prefix(&args.corpus).unwrap_or(file).with_extension("html");
                let target = rel.to_string_lossy().replace('\\', "/");
                let cfg = &cfg;
                strategies.iter().map(move |&strategy| {
                    let result = if strategy == Strategy::FeedA11y {
                        let input = SessionInput::Summary { path: target.clone(), summary: summary.clone() };
                        let optimizer = if oracle {
                            Optimizer::Oracle(OracleRewriter::new(cfg.rules.clone()))
                        } else {
                            Optimizer::Model(generator_ref)
                        };
                        session::run(&input, Some(generator_ref), &optimizer, cfg)
                            .map_err(anyhow::Error::from)
                            .map(|s| (s.final_rate.clone(), s.final_code))
                    } else {
                        session::run_strategy(&target, summary, strategy, generator_ref, None, eval, &cfg.rules)
                            .map_err(anyhow::Error::from)
                            .map(|o| (o.rate, o.code))
                    };
                    (project.clone(), strategy, target.clone(), result)
                })
            })
            .collect()
    });

    let mut grouped: BTreeMap<(String, Strategy), Vec<(String, RateSummary)>> = BTreeMap::new();
    let mut failures = 0;
    for (project, strategy, target, result) in cells {
        match result {
            Ok((rate, code)) => {
                run.writer.write(&args.out.join(strategy.as_str()).join(&target), code.as_bytes())?;
                grouped.entry((project, strategy)).or_default().push((target, rate));
            }
            Err(e) => {
                failures += 1;
                eprintln!("{target} [{strategy}]: {e:#}");
            }
        }
    }
    let records: Vec<RateRecord> = grouped
        .iter()
        .map(|((project, strategy), pages)| RateRecord::from_pages(project, strategy.as_str(), eval, pages))
        .collect();
    let table = build_table(&records)?;
    let text = render(&table, args.format)?;
    run.writer.write(&args.out.join("comparison.json"), (serde_json::to_string_pretty(&table)? + "\n").as_bytes())?;
    run.emit(&text);
    run.manifest.results = records;
    let config = json!({
        "eval_ruleset": eval,
        "optimize_ruleset": cfg.optimize,
        "backend": s.backend,
        "optimizer": args.optimizer,
        "strategies": strategies,
        "max_rounds": cfg.max_rounds,
        "options": cfg.options,
    });
    Ok((if failures > 0 { 1 } else { 0 }, config))
}
