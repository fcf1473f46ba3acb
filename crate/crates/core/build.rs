use std::fmt::Write as _;
use std::path::Path;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("exemplars");
    println!("cargo:rerun-if-changed={}", dir.display());
    let mut rules: Vec<String> = std::fs::read_dir(&dir)
        .expect("exemplars directory")
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    rules.sort();
    let mut out = String::from("pub static RAW_EXEMPLARS: &[(&str, &str, &str)] = &[\n");
    for rule in rules {
        for file in ["correct.html", "counter.html"] {
            println!("cargo:rerun-if-changed={}", dir.join(&rule).join(file).display());
        }
        let base = dir.join(&rule);
        writeln!(
            out,
            "    ({rule:?}, include_str!({:?}), include_str!({:?})),",
            base.join("correct.html").display().to_string(),
            base.join("counter.html").display().to_string()
        )
        .unwrap();
    }
    out.push_str("];\n");
    let dest = Path::new(&std::env::var("OUT_DIR").unwrap()).join("exemplars.rs");
    std::fs::write(dest, out).unwrap();
}
