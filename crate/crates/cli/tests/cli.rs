use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use uwl_core::transcribe::{transcribe, TranslationTable, Vocabulary};
use uwl_core::{parse, serialize};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> PathBuf {
    repo().join("fixtures").join(name)
}

fn uwl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uwl"))
        .args(args)
        .current_dir(repo())
        .env_remove("UWL_LOCALE_DIR")
        .env_remove("UWL_VOCAB_PATH")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn validate_exit_codes() {
    let o = uwl(&["validate", p(&fixture("case_a.json"))]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "OK\n");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let doc = uwl_core::Document::new("X")
        .with(uwl_core::ActionNode::new(1, "Add").with_edges(uwl_core::model::EdgeType::A, [5]));
    std::fs::write(&bad, serialize(&doc)).unwrap();
    let o = uwl(&["validate", p(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    let o = uwl(&["--json", "validate", p(&bad)]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["valid"], false);

    assert_eq!(uwl(&["validate", "no/such/file.json"]).status.code(), Some(2));
    assert_eq!(uwl(&["validate"]).status.code(), Some(1));
    assert_eq!(uwl(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(uwl(&["--help"]).status.code(), Some(0));
}

#[test]
fn transcribe_matches_library() {
    for case in ["a", "b", "c"] {
        let path = fixture(&format!("case_{case}.json"));
        let doc = parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let want = transcribe(&doc, &Vocabulary::builtin(), &TranslationTable::english()).unwrap();
        let o = uwl(&["transcribe", p(&path)]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(stdout(&o), want);
    }
}

#[test]
fn transcribe_from_stdin_to_file_and_in_spanish() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("protocol.txt");
    let mut child = Command::new(env!("CARGO_BIN_EXE_uwl"))
        .args(["transcribe", "-", "--out", p(&out)])
        .current_dir(repo())
        .stdin(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&std::fs::read(fixture("case_c.json")).unwrap()).unwrap();
    assert!(child.wait().unwrap().success());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), stdout(&uwl(&["transcribe", p(&fixture("case_c.json"))])));

    let o = uwl(&["transcribe", p(&fixture("case_c.json")), "--lang", "es"]);
    assert!(stdout(&o).starts_with("Nombre del experimento"));
    assert_eq!(uwl(&["transcribe", p(&fixture("case_c.json")), "--lang", "zz"]).status.code(), Some(2));

    let o = Command::new(env!("CARGO_BIN_EXE_uwl"))
        .args(["transcribe", p(&fixture("case_c.json")), "--lang", "es"])
        .current_dir(dir.path())
        .env("UWL_LOCALE_DIR", repo().join("locales"))
        .output()
        .unwrap();
    assert!(o.status.success());
}

#[test]
fn table_export_and_apply() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let a = fixture("case_a.json");
    let o = uwl(&["table", p(&a), p(&fixture("case_b.json")), "--csv", p(&csv)]);
    assert!(o.status.success());
    let docs: Vec<_> = ["case_a.json", "case_b.json"]
        .iter()
        .map(|f| parse(&std::fs::read_to_string(fixture(f)).unwrap()).unwrap())
        .collect();
    let want = uwl_core::table::to_csv(&uwl_core::table::flatten(&[&docs[0], &docs[1]]));
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), want);

    let single = stdout(&uwl(&["table", p(&a)]));
    let line = single.lines().find(|l| l.ends_with("####")).unwrap().to_string();
    let edited = single.replacen(&line, &line.replace("####", "5 g"), 1);
    std::fs::write(&csv, edited).unwrap();
    let target = dir.path().join("a.json");
    std::fs::copy(&a, &target).unwrap();
    let o = uwl(&["--json", "table", "apply", p(&target), "--csv", p(&csv)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["applied"], 1);
    let after = stdout(&uwl(&["table", p(&target)]));
    assert!(after.contains(&line.replace("####", "5 g")));
}

#[test]
fn lint_reports_and_thresholds() {
    let args = |extra: &[&str]| -> Output {
        let mut v = vec!["lint".to_string()];
        for c in ["a", "b", "c"] {
            v.push(p(&fixture(&format!("case_{c}.json"))).to_string());
        }
        for c in ["a", "b", "c"] {
            v.push("--annotations".into());
            v.push(p(&fixture(&format!("case_{c}.lint.json"))).to_string());
        }
        v.extend(extra.iter().map(|s| s.to_string()));
        uwl(&v.iter().map(String::as_str).collect::<Vec<_>>())
    };
    let o = args(&["--aggregate", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["reports"][0]["report"]["equipment"]["missing"], 22);
    assert!((v["summary"]["mean_word_count"].as_f64().unwrap() - 294.333).abs() < 1e-3);
    assert_eq!(args(&["--fail-over", "10"]).status.code(), Some(2));
    assert_eq!(args(&["--fail-over", "1000"]).status.code(), Some(0));
    let o = uwl(&["lint", p(&fixture("case_a.json")), "--annotations", p(&fixture("case_b.lint.json"))]);
    assert_eq!(o.status.code(), Some(2));
    let o = uwl(&["lint", p(&fixture("case_a.json")), p(&fixture("case_b.json")), "--annotations", p(&fixture("case_a.lint.json"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn translate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let es = dir.path().join("es.json");
    let back = dir.path().join("back.json");
    let table = repo().join("locales/es.toml");
    let a = fixture("case_a.json");
    let o = uwl(&["translate", p(&a), "--table", p(&table), "--direction", "to_target", "--strict", "--out", p(&es)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = uwl(&["translate", p(&es), "--table", p(&table), "--direction", "to-english", "--strict", "--out", p(&back)]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(&back).unwrap(), std::fs::read(&a).unwrap());

    let empty = dir.path().join("empty.toml");
    std::fs::write(&empty, "language = \"xx\"\n").unwrap();
    let o = uwl(&["translate", p(&a), "--table", p(&empty), "--direction", "to_target", "--strict"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("untranslated: item \"Beaker\""));
    let o = uwl(&["translate", p(&a), "--table", p(&empty), "--direction", "sideways"]);
    assert_eq!(o.status.code(), Some(1));
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn generate_is_deterministic_and_feeds_surrogate_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let (d1, d2) = (dir.path().join("d1"), dir.path().join("d2"));
    for d in [&d1, &d2] {
        let o = uwl(&["generate", "--preset", "low", "--seed", "7", "--count", "10", "--out", p(d)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let contents = dir_contents(&d1);
    assert_eq!(contents, dir_contents(&d2));
    assert_eq!(contents.keys().filter(|k| k.starts_with("sample_")).count(), 10);

    let responses: Vec<String> =
        String::from_utf8(contents["responses.txt"].clone()).unwrap().lines().map(str::to_string).collect();
    let first = d1.join("sample_0000.json");
    assert_eq!(stdout(&uwl(&["surrogate", p(&first)])).trim(), responses[0]);

    let graph: serde_json::Value = serde_json::from_str(&stdout(&uwl(&["export", p(&first), "--format", "graph"]))).unwrap();
    assert!(graph["nodes"].as_array().unwrap().len() >= 2);
    let flat: serde_json::Value =
        serde_json::from_str(&stdout(&uwl(&["export", p(&first), "--format", "flat", "--preset", "low"]))).unwrap();
    assert_eq!(flat["flat"].as_array().unwrap().len(), 33);
    assert_eq!(uwl(&["export", p(&first), "--format", "flat"]).status.code(), Some(1));

    let data = dir.path().join("data");
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        "max_actions = 2\nitems_per_action = 1\nscalar_params_per_action = 1\naction_types = 5\nitem_types = 3\nseed = 3\ncount = 25\n",
    )
    .unwrap();
    let o = uwl(&["generate", "--config", p(&cfg), "--out", p(&data), "--format", "dataset"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines = std::fs::read_to_string(data.join("dataset.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 25);
    let record: serde_json::Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    for key in ["actions", "response", "graph", "flat"] {
        assert!(record.get(key).is_some(), "{key}");
    }
    std::fs::write(&cfg, "max_actions = 2\nitems_per_action = 1\nscalar_params_per_action = 1\naction_types = 12\nitem_types = 3\n").unwrap();
    assert_eq!(uwl(&["generate", "--config", p(&cfg), "--out", p(&data)]).status.code(), Some(2));
    assert_eq!(uwl(&["generate", "--out", p(&data)]).status.code(), Some(1));
}
