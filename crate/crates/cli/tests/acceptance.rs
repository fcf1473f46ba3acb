//! End-to-end acceptance checks. Runs as a plain binary so that every
//! criterion prints its own pass/fail line, even when another one fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use a11y_cli::corpus::{build_index, draw_sample};
use a11y_core::color::{contrast_ratio, parse_color, Rgba};
use a11y_core::exemplars::for_ruleset;
use a11y_core::html::parse_html_str;
use a11y_core::metrics::{aggregate, mean, rate, RateSummary};
use a11y_core::rules::{evaluate, implemented, AccessibilityReport, Finding, Level, RuleConfig, Ruleset};
use a11y_core::segment::{block_at, reassemble, sample_size, segment, UiDetector};
use a11y_core::SourceSpan;
use a11y_refine::gateway::{GenerationRequest, RecordingBackend};
use a11y_refine::prompts::{
    build_prompt, extract_code, join_sections, naive_text, react_sections, PromptOptions, ReactContext, Section, Strategy,
};
use a11y_refine::session::{self, Optimizer, RefineConfig, SessionInput, Status};
use a11y_refine::source::evaluate_source;
use a11y_refine::{FnBackend, GatewayError, OracleRewriter};
use proptest::prelude::*;
use proptest::strategy::Strategy as _;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn runner(cases: u32, seed: u8) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]))
}

fn exemplar_duality() -> Outcome {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut counts = BTreeMap::new();
    for rs in [Ruleset::A, Ruleset::Q] {
        let ids: BTreeSet<&str> = implemented(rs).map(|r| r.id).collect();
        let exemplars: Vec<_> = for_ruleset(rs).into_iter().filter(|e| ids.contains(e.rule_id)).collect();
        ensure!(exemplars.len() == ids.len(), "ruleset {rs}: {} implemented rules but {} exemplars", ids.len(), exemplars.len());
        for ex in &exemplars {
            let good = evaluate(&parse_html_str(ex.correct), rs).findings_for(ex.rule_id).count();
            let bad = evaluate(&parse_html_str(ex.counter), rs).findings_for(ex.rule_id).count();
            if good != 0 || bad == 0 {
                failures.push(format!("{}: correct={good} counter={bad}", ex.rule_id));
            }
        }
        counts.insert(rs, exemplars.len());
    }
    let elapsed = started.elapsed();
    ensure!(failures.is_empty(), "{failures:?}");
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("{} A rules and {} Q rules, all pairs hold, {elapsed:.2?}", counts[&Ruleset::A], counts[&Ruleset::Q]))
}

fn color_math() -> Outcome {
    let black = parse_color("#000").unwrap();
    let white = parse_color("#FFF").unwrap();
    let r = contrast_ratio(black, white);
    ensure!((r - 21.0).abs() < 1e-6, "black on white = {r}");

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let c = Rgba { r: rng.random(), g: rng.random(), b: rng.random(), a: 1.0 };
        let same = contrast_ratio(c, c);
        ensure!((same - 1.0).abs() < 1e-12, "{} on itself = {same}", c.to_hex());
    }

    let pass = contrast_ratio(parse_color("#767676").unwrap(), white);
    let darker = contrast_ratio(parse_color("#757575").unwrap(), white);
    let lighter = contrast_ratio(parse_color("#777777").unwrap(), white);
    ensure!(pass >= 4.5, "#767676 = {pass}");
    // A darker grey has more contrast against white, so #757575 passes too;
    // the first failing grey is the lighter neighbour #777777.
    ensure!(darker >= 4.5 && darker > pass, "#757575 = {darker}");
    ensure!(lighter < 4.5, "#777777 = {lighter}");

    let rgb = (any::<u8>(), any::<u8>(), any::<u8>()).prop_map(|(r, g, b)| Rgba { r, g, b, a: 1.0 });
    runner(10_000, 2)
        .run(&(rgb.clone(), rgb), |(a, b)| {
            let (x, y) = (contrast_ratio(a, b), contrast_ratio(b, a));
            prop_assert!((x - y).abs() < 1e-12);
            prop_assert!((1.0..=21.0 + 1e-9).contains(&x));
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "21:1 exact, 1000 self-pairs at 1:1, #767676={pass:.3} pass, #757575={darker:.3} pass, #777777={lighter:.3} fail, 10000 pairs symmetric in [1,21]"
    ))
}

fn finding(rule: &str, idx: usize, level: Level) -> Finding {
    Finding {
        rule_id: rule.to_string(),
        doc_index: idx,
        path: String::new(),
        span: SourceSpan::new(0, 0),
        stylesheet: None,
        message: String::new(),
        evidence: BTreeMap::new(),
        level,
    }
}

fn metric_reproduction() -> Outcome {
    let human = [0.488, 0.894, 0.108, 0.562, 0.368, 0.391, 0.055, 0.823, 0.310, 0.255];
    let pages: Vec<RateSummary> = human
        .iter()
        .map(|&r| RateSummary { rate: Some(r), ..RateSummary::from_counts(0, 0, BTreeMap::new()) })
        .collect();
    let avg = aggregate(&pages).unwrap();
    ensure!((avg - 0.425).abs() <= 0.0005, "average {avg}");
    ensure!(mean(human.iter().map(|&r| Some(r))) == Some(avg), "mean and aggregate disagree");

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rules = ["r1", "r2", "r3", "r4"];
    for case in 0..100 {
        let mut census: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        for r in rules {
            if rng.random_bool(0.8) {
                let n = rng.random_range(0..12);
                census.insert(r.to_string(), (0..n).map(|_| rng.random_range(0..20)).collect());
            }
        }
        let levels = [Level::Violation, Level::Failed, Level::PotentialViolation, Level::Passed];
        let findings: Vec<Finding> = (0..rng.random_range(0..15))
            .map(|_| finding(rules[rng.random_range(0..4)], rng.random_range(0..24), levels[rng.random_range(0..4)]))
            .collect();
        let report = AccessibilityReport { ruleset: Ruleset::A, file: String::new(), findings, census };

        let mut union = Vec::new();
        for set in report.census.values() {
            for &i in set {
                if !union.contains(&i) {
                    union.push(i);
                }
            }
        }
        let mut bad = Vec::new();
        for f in &report.findings {
            if f.level.is_counted() && union.contains(&f.doc_index) && !bad.contains(&f.doc_index) {
                bad.push(f.doc_index);
            }
        }
        let got = rate(&report);
        ensure!(
            got.numerator == bad.len() && got.denominator == union.len(),
            "case {case}: engine {}/{} vs brute force {}/{}",
            got.numerator,
            got.denominator,
            bad.len(),
            union.len()
        );
    }
    Ok(format!("human column average {avg:.4}, 100 random censuses match the set-union count"))
}

fn segmentation() -> Outcome {
    let mut files: Vec<PathBuf> = std::fs::read_dir(fixtures().join("corpus"))
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    let mut kinds = BTreeMap::new();
    let mut corpus = Vec::new();
    for f in &files {
        let bytes = std::fs::read(f).map_err(|e| e.to_string())?;
        let name = f.file_name().unwrap().to_string_lossy().into_owned();
        let blocks = segment(&name, &bytes);
        ensure!(reassemble(&blocks).map_err(|e| e.to_string())? == bytes, "{name} does not round-trip");
        *kinds.entry(f.extension().unwrap().to_string_lossy().into_owned()).or_insert(0) += 1;
        corpus.push((name, bytes, blocks));
    }
    let malformed = files.iter().filter(|f| f.to_string_lossy().contains("malformed")).count();
    ensure!(files.len() >= 50 && malformed > 0, "{} files, {malformed} malformed", files.len());

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let candidates: Vec<_> = corpus.iter().filter(|(_, _, b)| !b.is_empty()).collect();
    for trial in 0..100 {
        let (name, bytes, blocks) = candidates[rng.random_range(0..candidates.len())];
        let pick = rng.random_range(0..blocks.len());
        let len = rng.random_range(0..40);
        let replacement: Vec<u8> = (0..len).map(|_| b"<>{}ab \n"[rng.random_range(0..8)]).collect();
        let mut patched = blocks.clone();
        patched[pick].content = replacement.clone();
        let out = reassemble(&patched).map_err(|e| e.to_string())?;
        let span = blocks[pick].span;
        let ok = out[..span.start] == bytes[..span.start]
            && out[span.start..span.start + replacement.len()] == replacement[..]
            && out[span.start + replacement.len()..] == bytes[span.end..];
        ensure!(ok, "trial {trial}: replacing {name} block {pick} touched bytes outside it");
    }
    Ok(format!("{} files ({kinds:?}, {malformed} malformed) round-trip, 100 single-block patches stay local", files.len()))
}

/// Pages whose every counted violation is one the oracle can fix.
fn seeded_page(rng: &mut ChaCha8Rng, n: usize) -> String {
    let names = ["harbour", "bike-rental", "menu", "team_photo", "IMG_2041", "lighthouse", "recipe", "tickets"];
    let name = |rng: &mut ChaCha8Rng| names[rng.random_range(0..names.len())];
    let mut parts = Vec::new();
    let pieces = rng.random_range(1..5);
    for _ in 0..pieces {
        parts.push(match rng.random_range(0..5) {
            0 => format!("<div class=\"card\"><img src=\"{}.jpg\"></div>", name(rng)),
            1 => format!("<div><iframe src=\"{}.html\"></iframe></div>", name(rng)),
            2 => format!("<div><input type=\"text\" name=\"{}\"></div>", name(rng).replace('-', "_")),
            3 => format!(
                "<div><p style=\"color:#{0:02x}{0:02x}{0:02x};background-color:#ffffff\">Opening hours</p></div>",
                rng.random_range(0xa0..0xe0)
            ),
            _ => "<div><p>Welcome to our site.</p></div>".to_string(),
        });
    }
    // An image-only link is a violation under both rulesets.
    parts.push(format!("<nav><a href=\"/{0}\"><img src=\"{0}.png\"></a></nav>", name(rng)));
    let lang = if rng.random_bool(0.5) { "" } else { " lang=\"en\"" };
    let title = if rng.random_bool(0.5) { String::new() } else { format!("<title>Page {n}</title>") };
    format!(
        "<!DOCTYPE html>\n<html{lang}>\n<head>{title}</head>\n<body>\n<a href=\"#main\">Skip to main content</a>\n<main id=\"main\"><h1>Page {n}</h1></main>\n{}\n</body>\n</html>\n",
        parts.join("\n")
    )
}

fn oracle_loop() -> Outcome {
    let started = Instant::now();
    let cfg = RefineConfig { optimize: Ruleset::A, eval: Ruleset::Q, ..Default::default() };
    let oracle = Optimizer::Oracle(OracleRewriter::default());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut rounds_used = Vec::new();
    for n in 0..30 {
        let path = format!("seeded{n:02}.html");
        let code = seeded_page(&mut rng, n);
        for rs in [cfg.optimize, cfg.eval] {
            let before = evaluate_source(&path, code.as_bytes(), rs, &cfg.rules).map_err(|e| e.to_string())?;
            let unsupported: Vec<_> =
                before.counted().filter(|f| !OracleRewriter::supports(&f.rule_id)).map(|f| f.rule_id.clone()).collect();
            ensure!(unsupported.is_empty(), "{path} has {rs} violations the oracle cannot fix: {unsupported:?}");
        }

        let input = SessionInput::Code { path: path.clone(), code: code.into_bytes() };
        let s = session::run(&input, None, &oracle, &cfg).map_err(|e| e.to_string())?;
        ensure!(s.status == Status::Converged, "{path}: status {:?} after {} rounds", s.status, s.rounds.len());
        ensure!(s.rounds.len() <= 3, "{path}: {} rounds", s.rounds.len());
        let (a, b) = (s.initial_rate.rate, s.final_rate.rate);
        ensure!(matches!((a, b), (Some(x), Some(y)) if y < x), "{path}: rate {a:?} -> {b:?}");
        let mut previous: Option<&BTreeMap<String, usize>> = None;
        for r in &s.rounds {
            for (rule, after) in &r.violations_after {
                let before = r.violations_before.get(rule).copied().unwrap_or(0);
                ensure!(*after <= before, "{path} round {}: {rule} went {before} -> {after}", r.round);
            }
            if let Some(p) = previous {
                ensure!(p == &r.violations_before, "{path} round {}: counts changed between rounds", r.round);
            }
            previous = Some(&r.violations_after);
        }
        rounds_used.push(s.rounds.len());
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("30 sessions converged in at most {} rounds, every final rate lower, counts never rose, {elapsed:.2?}", rounds_used.iter().max().unwrap()))
}

fn a11y() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_a11y"));
    cmd.env("SOURCE_DATE_EPOCH", "1700000000");
    for (k, _) in std::env::vars() {
        if k.starts_with("A11Y_") {
            cmd.env_remove(k);
        }
    }
    cmd
}

fn ruleset_guard() -> Outcome {
    let calls = AtomicUsize::new(0);
    let counting = FnBackend::new("counting", |_: &GenerationRequest| {
        calls.fetch_add(1, Ordering::SeqCst);
        Ok("```html\n<p>x</p>\n```".to_string())
    });
    let cfg = RefineConfig { optimize: Ruleset::A, eval: Ruleset::A, ..Default::default() };
    let input = SessionInput::Summary { path: "p.html".into(), summary: "A page".into() };
    let result = session::run(&input, Some(&counting), &Optimizer::Model(&counting), &cfg);
    ensure!(result.is_err(), "same-ruleset session was allowed");
    ensure!(calls.load(Ordering::SeqCst) == 0, "backend was called {} times", calls.load(Ordering::SeqCst));

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    std::fs::write(dir.path().join("p.html"), "<html><body><img src=a.png></body></html>").unwrap();
    let out = a11y()
        .current_dir(dir.path())
        .args(["refine", "p.html", "--optimize-ruleset", "A", "--eval-ruleset", "A"])
        .args(["--backend", "replay", "--transcript", "missing.jsonl"])
        .output()
        .map_err(|e| e.to_string())?;
    let stderr = String::from_utf8_lossy(&out.stderr);
    ensure!(out.status.code() == Some(2), "exit {:?}: {stderr}", out.status.code());
    ensure!(stderr.contains("both use ruleset A"), "unexpected error: {stderr}");
    ensure!(!stderr.contains("missing.jsonl"), "the replay backend was opened: {stderr}");

    let allowed = a11y()
        .current_dir(dir.path())
        .args(["refine", "p.html", "--optimize-ruleset", "A", "--eval-ruleset", "A", "--allow-same-ruleset"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(allowed.status.success(), "override run failed: {}", String::from_utf8_lossy(&allowed.stderr));
    Ok("A/A refused by the library and the CLI before any backend exists; the override runs".to_string())
}

const SHOP: &str = "<html><head><title>Shop</title></head><body>\n<div class=\"hero\"><img src=\"red-shoes.png\"></div>\n<div><iframe src=\"map.html\"></iframe></div>\n</body></html>";

/// Stand-in model: a fixed page for generation, oracle repairs for blocks.
fn scripted(req: &GenerationRequest) -> Result<String, GatewayError> {
    let prompt = &req.messages.last().expect("a message").content;
    if prompt.starts_with("Act as a software developer") {
        return Ok(format!("```html\n{SHOP}\n```"));
    }
    let block = extract_code(prompt).ok_or_else(|| GatewayError::BadResponse("no code in prompt".into()))?;
    let report = evaluate_source("b.html", block.as_bytes(), Ruleset::A, &RuleConfig::default())
        .map_err(|e| GatewayError::BadResponse(e.to_string()))?;
    let findings: Vec<_> = report.counted().cloned().collect();
    let fixed = OracleRewriter::default().rewrite("b.html", block.as_bytes(), &findings);
    Ok(format!("Thought: add text alternatives.\nAction:\n```html\n{}\n```\nObservation: resolved.", String::from_utf8_lossy(&fixed)))
}

fn replay_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let summary = "A storefront with a hero photo and an embedded map.\n";
    std::fs::write(dir.path().join("shop.txt"), summary).unwrap();
    let transcript = dir.path().join("shop.jsonl");
    let recorder = RecordingBackend::new(FnBackend::new("scripted", scripted), &transcript);
    let cfg = RefineConfig { optimize: Ruleset::A, eval: Ruleset::Q, ..Default::default() };
    let input = SessionInput::Summary { path: "shop.html".into(), summary: summary.into() };
    let recorded = session::run(&input, Some(&recorder), &Optimizer::Model(&recorder), &cfg).map_err(|e| e.to_string())?;
    ensure!(recorded.status == Status::Converged, "recording session ended {:?}", recorded.status);

    let mut runs = Vec::new();
    for _ in 0..2 {
        let out = a11y()
            .current_dir(dir.path())
            .args(["--manifest-dir", "manifests", "refine", "shop.txt", "--backend", "replay"])
            .args(["--transcript", "shop.jsonl", "--optimize-ruleset", "A", "--eval-ruleset", "Q", "--out", "out"])
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(out.status.success(), "refine failed: {}", String::from_utf8_lossy(&out.stderr));
        let session = std::fs::read(dir.path().join("out/shop.session.json")).map_err(|e| e.to_string())?;
        let mut manifests: Vec<_> = std::fs::read_dir(dir.path().join("manifests")).unwrap().map(|e| e.unwrap().path()).collect();
        manifests.sort();
        let manifest = std::fs::read(&manifests[0]).map_err(|e| e.to_string())?;
        ensure!(manifests.len() == 1, "expected one manifest, found {}", manifests.len());
        runs.push((session, manifest));
    }
    ensure!(runs[0].0 == runs[1].0, "session files differ");
    ensure!(runs[0].1 == runs[1].1, "run manifests differ");
    let parsed: serde_json::Value = serde_json::from_slice(&runs[0].0).unwrap();
    ensure!(parsed["final_code"] == recorded.final_code.as_str(), "replay diverged from the recording");
    Ok(format!("two replayed runs wrote identical session ({} bytes) and run manifests", runs[0].0.len()))
}

fn prompt_fidelity() -> Outcome {
    let summary = "A sign-up page with a form for name and email.";
    let naive = naive_text(summary).map_err(|e| e.to_string())?;
    ensure!(naive.contains("Act as a software developer"), "persona missing");
    let lower = naive.to_lowercase();
    for word in ["accessib", "wcag", "a11y", "aria", "screen reader"] {
        ensure!(!lower.contains(word), "naive prompt mentions {word:?}");
    }
    let text = |s, ex: &[_]| -> Result<String, String> {
        Ok(build_prompt(s, summary, ex).map_err(|e| e.to_string())?.into_iter().map(|m| m.content).collect())
    };
    let zero = text(Strategy::ZeroShot, &[])?;
    ensure!(zero.starts_with(&naive) && zero.len() > naive.len(), "zero-shot does not extend naive");
    ensure!(zero.to_lowercase().contains("wcag"), "zero-shot lacks the accessibility instruction");
    let few = text(Strategy::FewShot, &for_ruleset(Ruleset::A))?;
    ensure!(few.starts_with(&zero), "few-shot does not extend zero-shot");
    let entries = few.matches("\nIncorrect example:").count();
    ensure!(entries == 34, "few-shot has {entries} exemplar entries");
    ensure!(few.matches("Rule ").count() >= 34, "entries are not numbered");

    let calls = AtomicUsize::new(0);
    let backend = FnBackend::new("counting", |req: &GenerationRequest| {
        calls.fetch_add(1, Ordering::SeqCst);
        let reviewing = req.messages.iter().any(|m| m.content.starts_with("You are a code reviewer"));
        Ok(format!("```html\n<html lang=\"en\"><body><p>{}</p></body></html>\n```", if reviewing { "reviewed" } else { "draft" }))
    });
    let outcome = session::run_strategy("s.html", summary, Strategy::SelfCriticism, &backend, None, Ruleset::A, &RuleConfig::default())
        .map_err(|e| e.to_string())?;
    let n = calls.load(Ordering::SeqCst);
    ensure!(n == 2 && outcome.prompts.len() == 2, "self-criticism made {n} calls");
    ensure!(outcome.code.contains("reviewed"), "review output was not kept");
    Ok("naive has the persona only, zero-shot extends it, few-shot over A embeds 34 entries, self-criticism reviews once".to_string())
}

fn ablation() -> Outcome {
    let page = "<html><body><div><img src=\"logo.png\"><iframe src=\"map.html\"></iframe><p style=\"color:#aaa\">x</p></div></body></html>";
    let blocks = segment("p.html", page.as_bytes());
    let report = evaluate_source("p.html", page.as_bytes(), Ruleset::A, &RuleConfig::default()).map_err(|e| e.to_string())?;
    let target = block_at(&blocks, page.find("<img").unwrap()).unwrap();
    let findings: Vec<Finding> = report.counted().filter(|f| block_at(&blocks, f.span.start) == Some(target)).cloned().collect();
    let ctx = |options| ReactContext { summary: Some("A landing page"), block: &blocks[target], findings: &findings, styles: "[]", options };
    let full = react_sections(&ctx(PromptOptions::default())).map_err(|e| e.to_string())?;
    type Clear = fn(&mut PromptOptions);
    let flags: [(Section, Clear); 5] = [
        (Section::Instructions, |o| o.accessibility_instructions = false),
        (Section::Guidelines, |o| o.guideline_descriptions = false),
        (Section::Examples, |o| o.code_examples = false),
        (Section::TestRules, |o| o.testing_rules = false),
        (Section::Styles, |o| o.style_properties = false),
    ];
    for (section, clear) in flags {
        let mut options = PromptOptions::default();
        clear(&mut options);
        let reduced = react_sections(&ctx(options)).map_err(|e| e.to_string())?;
        let expected: Vec<_> = full.iter().filter(|(s, _)| *s != section).cloned().collect();
        ensure!(reduced.len() + 1 == full.len(), "{section:?}: {} sections left of {}", reduced.len(), full.len());
        ensure!(join_sections(&reduced) == join_sections(&expected), "{section:?}: other sections changed");
    }
    Ok(format!("each of 5 flags drops exactly its section from the {}-section prompt", full.len()))
}

fn sampling() -> Outcome {
    let a = sample_size(86, 0.9, 0.1).map_err(|e| e.to_string())?;
    let b = sample_size(1, 0.9, 0.1).map_err(|e| e.to_string())?;
    ensure!(a == 39 && b == 1, "sample_size(86)={a}, sample_size(1)={b}");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for i in 0..86 {
        std::fs::write(dir.path().join(format!("f{i:02}.css")), "p { color: red }").unwrap();
    }
    let (index, _) = build_index(dir.path(), &UiDetector::default()).map_err(|e| e.to_string())?;
    let first = draw_sample(&index, 42, 0.9, 0.1).map_err(|e| e.to_string())?;
    let second = draw_sample(&index, 42, 0.9, 0.1).map_err(|e| e.to_string())?;
    ensure!(first == second && first.files.len() == 39, "sampling is not reproducible");
    ensure!(first.files != draw_sample(&index, 43, 0.9, 0.1).unwrap().files, "seed has no effect");
    Ok("sample_size(86)=39, sample_size(1)=1, seed 42 draws the same 39 files twice".to_string())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("exemplar duality", exemplar_duality),
        ("contrast math", color_math),
        ("metric reproduction", metric_reproduction),
        ("segmentation round-trip", segmentation),
        ("oracle refinement loop", oracle_loop),
        ("cross-ruleset guard", ruleset_guard),
        ("replay determinism", replay_determinism),
        ("prompt fidelity", prompt_fidelity),
        ("ablation plumbing", ablation),
        ("sample size", sampling),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", n + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", n + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
