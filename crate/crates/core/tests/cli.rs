use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bnqa::corpus::QaDataset;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_bnqa");

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            fs::copy(entry.path(), target).unwrap();
        }
    }
}

/// Fixtures copied to a temp dir, with the config's epoch count lowered.
fn workspace(epochs: u64) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&fixtures(), dir.path());
    let path = dir.path().join("config.json");
    let mut config: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    config["train.epochs"] = epochs.into();
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    dir
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env("BNQA_CONFIG", dir.join("config.json"))
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn assert_ok(o: &Output, what: &str) {
    assert!(o.status.success(), "{what} failed\nstdout:\n{}\nstderr:\n{}", stdout(o), stderr(o));
}

#[test]
fn pipeline_runs_from_one_config() {
    let ws = workspace(2);
    let dir = ws.path();
    for cmd in ["ingest", "build-vocab", "validate", "split", "train", "eval"] {
        assert_ok(&run(dir, &[cmd]), cmd);
    }
    let work = dir.join("work");
    for file in ["contexts.json", "vocab.txt", "train.json", "eval.json", "checkpoint/manifest.json", "report.json"] {
        assert!(work.join(file).is_file(), "{file} missing");
    }
    let report: Value = serde_json::from_str(&fs::read_to_string(work.join("report.json")).unwrap()).unwrap();
    for key in ["em", "f1", "perplexity", "n", "per_example"] {
        assert!(report.get(key).is_some(), "report lacks {key}");
    }
    let eval = QaDataset::load(&work.join("eval.json")).unwrap();
    assert_eq!(report["n"].as_u64().unwrap() as usize, eval.question_count());

    // training can continue from the last checkpoint
    let mut config: Value = serde_json::from_str(&fs::read_to_string(dir.join("config.json")).unwrap()).unwrap();
    config["train.epochs"] = 3.into();
    fs::write(dir.join("config.json"), config.to_string()).unwrap();
    let o = run(dir, &["train", "--resume"]);
    assert_ok(&o, "train --resume");
    assert!(stdout(&o).contains("epoch    3"), "{}", stdout(&o));

    let o = run(dir, &["stats", "--json"]);
    assert_ok(&o, "stats");
    let stats: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(stats["questions"], 24);

    let ds = QaDataset::load(&dir.join("overfit.json")).unwrap();
    let (id, p) = &ds.paragraphs()[0];
    let o = run(dir, &["ask", "--context-id", id, "--question", &p.qas[0].question, "-k", "2", "--json"]);
    assert_ok(&o, "ask");
    let answers: Vec<Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(!answers.is_empty() && answers.len() <= 2);
    for a in &answers {
        let (s, e) = (a["char_start"].as_u64().unwrap() as usize, a["char_end"].as_u64().unwrap() as usize);
        let slice: String = p.context.chars().skip(s).take(e - s).collect();
        assert_eq!(a["text"].as_str().unwrap(), slice);
    }

    let ctx_file = dir.join("context.txt");
    fs::write(&ctx_file, &p.context).unwrap();
    let o = run(dir, &["ask", "--context-file", ctx_file.to_str().unwrap(), "--question", &p.qas[0].question]);
    assert_ok(&o, "ask --context-file");
    assert!(stdout(&o).starts_with("1. ["), "{}", stdout(&o));
}

#[test]
fn ingested_paragraphs_match_the_annotated_fixture() {
    let ws = workspace(1);
    let dir = ws.path();
    let o = run(dir, &["ingest", "--out", "skeleton.json"]);
    assert_ok(&o, "ingest");
    let skeleton = QaDataset::load(&dir.join("skeleton.json")).unwrap();
    let annotated = QaDataset::load(&dir.join("overfit.json")).unwrap();
    for (id, p) in annotated.paragraphs() {
        let found = skeleton
            .find_paragraph(&id)
            .unwrap_or_else(|| panic!("ingest produced no paragraph {id}"));
        assert_eq!(found.context, p.context, "{id}");
        assert!(found.qas.is_empty());
    }
}

#[test]
fn validate_reports_and_exit_codes() {
    let ws = workspace(1);
    let dir = ws.path();
    let o = run(dir, &["validate", "--dataset", "validator/valid.json"]);
    assert_ok(&o, "validate valid");
    assert!(stdout(&o).contains("0 errors"));

    let o = run(dir, &["validate", "--dataset", "validator/dup_id.json", "--json"]);
    assert_eq!(o.status.code(), Some(5));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["errors"].as_array().unwrap().len(), 1);
    assert!(stderr(&o).trim_end().ends_with("1 validation errors"));
    assert!(stderr(&o).lines().last().unwrap().starts_with("error: data: "));
}

#[test]
fn failures_map_to_distinct_exit_codes() {
    let ws = workspace(1);
    let dir = ws.path();
    let cases: [(&[&str], i32, &str); 6] = [
        (&["validate", "--no-such-flag"], 2, "usage"),
        (&["frobnicate"], 2, "usage"),
        (&["validate", "--dataset", "missing.json"], 4, "io"),
        (&["--train.epochs", "0", "train"], 3, "config"),
        (&["--set", "train.no_such_key=1", "stats"], 3, "config"),
        (&["eval", "--checkpoint", "no-checkpoint", "--dataset", "overfit.json"], 4, "io"),
    ];
    for (args, code, category) in cases {
        let o = run(dir, args);
        assert_eq!(o.status.code(), Some(code), "{args:?}: {}", stderr(&o));
        let err = stderr(&o);
        let last = err.lines().last().unwrap_or("");
        assert!(last.starts_with(&format!("error: {category}: ")), "{args:?}: {last}");
    }
    let o = run(dir, &["--help"]);
    assert_ok(&o, "--help");
    assert!(stdout(&o).contains("Exit codes"));

    fs::write(dir.join("broken.json"), "{\"data\": 3}").unwrap();
    let o = run(dir, &["stats", "--dataset", "broken.json"]);
    assert_eq!(o.status.code(), Some(5));
}
