//! Corpus ingestion: find the UI files of a source tree and draw a
//! reproducible sample of them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use a11y_core::segment::{sample_size, UiDetector, UiReason};
use anyhow::{bail, Context, Result};
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::Run;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedFile {
    /// Relative to the corpus root, `/`-separated.
    pub path: String,
    pub is_ui: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reasons: Vec<UiReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub seed: u64,
    pub confidence: f64,
    pub margin: f64,
    pub population: usize,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusIndex {
    pub root: String,
    /// Free-form selection metadata such as star or contributor counts.
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
    pub files: Vec<IndexedFile>,
    pub ui_files: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<Sample>,
}

impl CorpusIndex {
    pub fn ui_paths(&self) -> impl Iterator<Item = &str> {
        self.files.iter().filter(|f| f.is_ui).map(|f| f.path.as_str())
    }
}

fn relative(root: &Path, p: &Path) -> String {
    p.strip_prefix(root)
        .unwrap_or(p)
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// Files read during indexing, kept so callers can hash them.
pub type FileContents = Vec<(PathBuf, Vec<u8>)>;

/// Walk `root`, skipping version-control and dependency directories, and
/// classify every file.
pub fn build_index(root: &Path, detector: &UiDetector) -> Result<(CorpusIndex, FileContents)> {
    if !root.is_dir() {
        bail!("{} is not a directory", root.display());
    }
    let mut files = Vec::new();
    let mut contents = Vec::new();
    let walker = walkdir::WalkDir::new(root).sort_by_file_name().into_iter().filter_entry(|e| {
        let name = e.file_name().to_string_lossy();
        e.depth() == 0 || !(e.file_type().is_dir() && matches!(name.as_ref(), ".git" | "node_modules" | ".a11y"))
    });
    for entry in walker {
        let entry = entry.with_context(|| format!("walking {}", root.display()))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let bytes = std::fs::read(entry.path()).with_context(|| format!("reading {}", entry.path().display()))?;
        let rel = relative(root, entry.path());
        let verdict = detector.detect(&rel, &bytes);
        files.push(IndexedFile { path: rel, is_ui: verdict.is_ui, reasons: verdict.reasons, rejection: verdict.rejection });
        contents.push((entry.into_path(), bytes));
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    let ui_files = files.iter().filter(|f| f.is_ui).count();
    let index = CorpusIndex { root: root.display().to_string(), metadata: BTreeMap::new(), files, ui_files, sample: None };
    Ok((index, contents))
}

/// Draw `sample_size(population)` UI files with a seeded generator. The
/// result is in path order and depends only on the file list and the seed.
pub fn draw_sample(index: &CorpusIndex, seed: u64, confidence: f64, margin: f64) -> Result<Sample> {
    let population: Vec<&str> = index.ui_paths().collect();
    let files = if population.is_empty() {
        Vec::new()
    } else {
        let n = sample_size(population.len() as u64, confidence, margin)? as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = rand::seq::index::sample(&mut rng, population.len(), n).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| population[i].to_string()).collect()
    };
    Ok(Sample { seed, confidence, margin, population: population.len(), files })
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    pub root: PathBuf,
    /// Write the index here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sample the UI files (90% confidence, 10% margin unless configured).
    #[arg(long)]
    pub sample: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub confidence: Option<f64>,
    #[arg(long)]
    pub margin: Option<f64>,
    /// Selection metadata recorded verbatim, e.g. `--meta stars=120`.
    #[arg(long = "meta", value_parser = parse_meta)]
    pub meta: Vec<(String, String)>,
}

fn parse_meta(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| format!("expected key=value, got {s:?}"))
}

pub fn ingest_cmd(run: &mut Run, args: &IngestArgs) -> Result<(i32, serde_json::Value)> {
    let (mut index, contents) = build_index(&args.root, &UiDetector::default())?;
    for (p, bytes) in &contents {
        run.input(p, bytes);
    }
    index.metadata = args.meta.iter().cloned().collect();
    if index.files.is_empty() {
        eprintln!("warning: {} contains no files", args.root.display());
    }
    let seed = args.seed.unwrap_or(run.settings.seed);
    let confidence = args.confidence.unwrap_or(run.settings.confidence);
    let margin = args.margin.unwrap_or(run.settings.margin);
    if args.sample {
        index.sample = Some(draw_sample(&index, seed, confidence, margin)?);
    }
    let text = serde_json::to_string_pretty(&index)? + "\n";
    match &args.out {
        Some(p) => run.writer.write(p, text.as_bytes())?,
        None => run.emit(&text),
    }
    Ok((0, json!({ "sample": args.sample, "seed": seed, "confidence": confidence, "margin": margin })))
}
