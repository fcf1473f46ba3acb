//! Command-line front end for the accessibility toolkit.

pub mod config;
pub mod corpus;
pub mod manifest;
mod inspect;
mod refine;
mod report;
mod scan;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use a11y_core::rules::Ruleset;
use a11y_refine::prompts::{PromptOptions, Strategy};
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::Settings;
use manifest::{now, FileHash, RunManifest, Writer};

/// Exit status for a command that ran but hit a tool error.
pub const EXIT_TOOL_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "a11y", version, about = "Static WCAG checks, inaccessibility rates and feedback-driven code refinement")]
pub struct Cli {
    /// Flat TOML settings file. `A11Y_<KEY>` variables override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Upper bound on files processed in parallel (0 = one per core).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Where run manifests are written.
    #[arg(long, global = true)]
    pub manifest_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate files against a ruleset and print findings.
    Scan(scan::ScanArgs),
    /// Inaccessibility rates per file and rule.
    Rate(scan::RateArgs),
    /// Split a file into patchable blocks.
    Segment(inspect::SegmentArgs),
    /// Resolved style of each element, with provenance.
    Styles(inspect::StylesArgs),
    /// Prompt inspection.
    #[command(subcommand)]
    Prompts(inspect::PromptsCommand),
    /// Index the UI files of a source tree, optionally sampling them.
    Ingest(corpus::IngestArgs),
    /// Generate or refine one file with a prompting strategy.
    Refine(refine::RefineArgs),
    /// Run every strategy over a corpus of file descriptions.
    Compare(refine::CompareArgs),
    /// Combine run manifests into a strategy comparison table.
    Report(report::ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
    Csv,
}

#[derive(Debug, Clone, Copy, Default, Args)]
pub struct OptionFlags {
    /// Drop the accessibility instructions from the repair prompt.
    #[arg(long)]
    pub no_instructions: bool,
    /// Drop the guideline descriptions.
    #[arg(long)]
    pub no_guidelines: bool,
    /// Drop the correct/incorrect code examples.
    #[arg(long)]
    pub no_examples: bool,
    /// Drop the testing rules.
    #[arg(long)]
    pub no_test_rules: bool,
    /// Drop the resolved style properties.
    #[arg(long)]
    pub no_styles: bool,
}

impl OptionFlags {
    pub fn options(&self) -> PromptOptions {
        PromptOptions {
            accessibility_instructions: !self.no_instructions,
            guideline_descriptions: !self.no_guidelines,
            code_examples: !self.no_examples,
            testing_rules: !self.no_test_rules,
            style_properties: !self.no_styles,
        }
    }
}

pub fn parse_ruleset(s: &str) -> Result<Ruleset, String> {
    s.parse()
}

pub fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse()
}

/// State shared by one command invocation.
pub struct Run {
    pub settings: Settings,
    pub writer: Writer,
    pub manifest: RunManifest,
    pool: rayon::ThreadPool,
}

impl Run {
    fn new(cli: &Cli, command: &str) -> Result<Self> {
        let mut settings = Settings::load(cli.config.as_deref())?;
        if let Some(j) = cli.jobs {
            settings.jobs = j;
        }
        if let Some(d) = &cli.manifest_dir {
            settings.manifest_dir = d.clone();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(settings.jobs)
            .build()
            .context("building worker pool")?;
        let started = now();
        Ok(Self { settings, writer: Writer::new(), manifest: RunManifest::new(command, serde_json::Value::Null, started), pool })
    }

    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.manifest.inputs.push(FileHash::of(&path.display().to_string(), bytes));
    }

    /// Print to stdout and record the bytes as an output.
    pub fn emit(&self, text: &str) {
        print!("{text}");
        self.writer.record("<stdout>", text.as_bytes());
    }

    fn finish(self, config: serde_json::Value) -> Result<PathBuf> {
        let mut manifest = self.manifest;
        manifest.config = config;
        self.writer.finish(manifest, &self.settings.manifest_dir)
    }
}

/// Entry point shared by the binary and tests. Returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_TOOL_ERROR } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_TOOL_ERROR
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let name = match &cli.command {
        Command::Scan(_) => "scan",
        Command::Rate(_) => "rate",
        Command::Segment(_) => "segment",
        Command::Styles(_) => "styles",
        Command::Prompts(_) => "prompts render",
        Command::Ingest(_) => "ingest",
        Command::Refine(_) => "refine",
        Command::Compare(_) => "compare",
        Command::Report(_) => "report",
    };
    let mut run = Run::new(cli, name)?;
    let (code, config) = match &cli.command {
        Command::Scan(a) => scan::scan(&mut run, a)?,
        Command::Rate(a) => scan::rate_cmd(&mut run, a)?,
        Command::Segment(a) => inspect::segment_cmd(&mut run, a)?,
        Command::Styles(a) => inspect::styles_cmd(&mut run, a)?,
        Command::Prompts(inspect::PromptsCommand::Render(a)) => inspect::render_cmd(&mut run, a)?,
        Command::Ingest(a) => corpus::ingest_cmd(&mut run, a)?,
        Command::Refine(a) => refine::refine_cmd(&mut run, a)?,
        Command::Compare(a) => refine::compare_cmd(&mut run, a)?,
        Command::Report(a) => report::report_cmd(&mut run, a)?,
    };
    let path = run.finish(config)?;
    eprintln!("manifest: {}", path.display());
    Ok(code)
}

/// Files under `paths`, directories expanded recursively and filtered by
/// `keep`, in sorted order. Missing paths are returned as-is so the caller
/// can report them.
pub fn expand_paths(paths: &[PathBuf], keep: impl Fn(&Path) -> bool) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = walkdir::WalkDir::new(p)
                .into_iter()
                .filter_map(|e| e.ok())
                .filter(|e| e.file_type().is_file() && keep(e.path()))
                .map(|e| e.into_path())
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    out
}
