use std::path::Path;
use std::process::{Command, Output};

use a11y_core::rules::{RuleConfig, Ruleset};
use a11y_refine::gateway::{GenerationRequest, RecordingBackend};
use a11y_refine::prompts::Strategy;
use a11y_refine::session::run_strategy;
use a11y_refine::{FnBackend, GatewayError};

fn a11y(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_a11y"))
        .current_dir(dir)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn scan_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.html"), "<html><body><img src=a.png></body></html>").unwrap();
    std::fs::write(
        dir.path().join("ok.html"),
        "<html lang=en><head><title>Ok</title></head><body><main><h1>Hi</h1></main></body></html>",
    )
    .unwrap();
    assert_eq!(a11y(dir.path(), &["scan", "bad.html"]).status.code(), Some(1));
    let ok = a11y(dir.path(), &["scan", "ok.html", "--format", "json"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert_eq!(a11y(dir.path(), &["scan", "missing.html"]).status.code(), Some(2));
    assert_eq!(a11y(dir.path(), &["scan", "bad.html", "--ruleset", "Z"]).status.code(), Some(2));
}

fn scripted(req: &GenerationRequest) -> Result<String, GatewayError> {
    let prompt: String = req.messages.iter().map(|m| m.content.as_str()).collect();
    let page = if prompt.starts_with("You are a code reviewer") || prompt.contains("Rule 1:") {
        "<html lang=\"en\"><head><title>T</title></head><body><main><img src=\"a.png\" alt=\"Harbour at dusk\"></main></body></html>"
    } else if prompt.contains("WCAG") {
        "<html lang=\"en\"><body><main><img src=\"a.png\"></main></body></html>"
    } else {
        "<html><body><div><img src=\"a.png\"><img src=\"b.png\"></div></body></html>"
    };
    Ok(format!("```html\n{page}\n```"))
}

#[test]
fn compare_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let summaries = [("harbour", "home.txt", "A harbour tour landing page."), ("bakery", "menu.txt", "A bakery menu page.")];
    let transcript = root.join("t.jsonl");
    let recorder = RecordingBackend::new(FnBackend::new("scripted", scripted), &transcript);
    for (project, file, text) in summaries {
        std::fs::create_dir_all(root.join("corpus").join(project)).unwrap();
        std::fs::write(root.join("corpus").join(project).join(file), text).unwrap();
        for strategy in [Strategy::Naive, Strategy::ZeroShot, Strategy::FewShot, Strategy::SelfCriticism] {
            run_strategy("x.html", text, strategy, &recorder, None, Ruleset::Q, &RuleConfig::default()).unwrap();
        }
    }

    let out = a11y(
        root,
        &[
            "--manifest-dir", "m", "compare", "corpus", "--backend", "replay", "--transcript", "t.jsonl",
            "--optimizer", "oracle", "--eval-ruleset", "Q", "--out", "cmp",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = stdout(&out);
    assert!(table.contains("harbour") && table.contains("AVG") && table.contains("feeda11y"), "{table}");
    assert!(root.join("cmp/comparison.json").is_file());
    assert!(root.join("cmp/feeda11y/harbour/home.html").is_file());

    let manifest = std::fs::read_dir(root.join("m")).unwrap().next().unwrap().unwrap().path();
    let report = a11y(root, &["--manifest-dir", "m2", "report", manifest.to_str().unwrap(), "--format", "json"]);
    assert!(report.status.success(), "{}", String::from_utf8_lossy(&report.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&report)).unwrap();
    let strategies: Vec<&str> = v["strategies"].as_array().unwrap().iter().map(|s| s.as_str().unwrap()).collect();
    assert_eq!(strategies, ["naive", "zero-shot", "few-shot", "self-criticism", "feeda11y"]);
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["avg"].as_array().unwrap().len(), 5);
    assert!(!v["per_rule"].as_array().unwrap().is_empty());

    let csv = a11y(root, &["--manifest-dir", "m2", "report", manifest.to_str().unwrap(), "--format", "csv"]);
    assert!(stdout(&csv).starts_with("corpus,naive,zero-shot"), "{}", stdout(&csv));
}

#[test]
fn ingest_samples_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("repo");
    std::fs::create_dir_all(tree.join("node_modules")).unwrap();
    for i in 0..20 {
        std::fs::write(tree.join(format!("v{i}.vue")), "<template><div/></template>").unwrap();
    }
    std::fs::write(tree.join("node_modules/skip.css"), "p{}").unwrap();
    let run = || a11y(dir.path(), &["ingest", "repo", "--sample", "--seed", "9", "--meta", "stars=12"]);
    let (a, b) = (run(), run());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(stdout(&a), stdout(&b));
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["files"].as_array().unwrap().len(), 20);
    assert_eq!(v["metadata"]["stars"], "12");
    assert_eq!(v["sample"]["files"].as_array().unwrap().len(), 16);
}

#[test]
fn rate_reads_saved_scan_output() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.html"), "<html><body><img src=a.png></body></html>").unwrap();
    let scan = a11y(dir.path(), &["scan", "a.html", "--format", "json"]);
    std::fs::write(dir.path().join("scan.json"), &scan.stdout).unwrap();
    let csv = a11y(dir.path(), &["scan", "a.html", "--format", "csv"]);
    assert!(stdout(&csv).starts_with("file,rule_id,level,path,start,end"), "{}", stdout(&csv));

    let from_scan = a11y(dir.path(), &["rate", "scan.json"]);
    let from_source = a11y(dir.path(), &["rate", "a.html"]);
    assert!(from_scan.status.success(), "{}", String::from_utf8_lossy(&from_scan.stderr));
    assert_eq!(stdout(&from_scan), stdout(&from_source));
    let rows: serde_json::Value = serde_json::from_str(&stdout(&from_scan)).unwrap();
    assert_eq!(rows[0]["rule_id"], "*");

    let vs = a11y(dir.path(), &["rate", "a.html", "--baseline", "scan.json", "--format", "csv"]);
    assert!(stdout(&vs).contains("a.html,*,"), "{}", stdout(&vs));
    assert!(stdout(&vs).lines().nth(1).unwrap().ends_with(",0.0"));
}
