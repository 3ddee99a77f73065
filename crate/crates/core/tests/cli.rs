use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn newscap(workdir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_newscap"))
        .args(args)
        .arg("--workdir")
        .arg(workdir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ingest(workdir: &Path, extra: &[&str]) -> Output {
    let config = data("pipeline.toml");
    let mut args = vec!["ingest", "--config", config.to_str().unwrap()];
    args.extend_from_slice(extra);
    newscap(workdir, &args)
}

#[test]
fn stage_out_of_order_names_missing_prerequisite() {
    let dir = tempfile::tempdir().unwrap();
    let out = newscap(dir.path(), &["train"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("run ingest first"), "{}", stderr(&out));

    assert!(ingest(dir.path(), &[]).status.success());
    assert!(newscap(dir.path(), &["annotate"]).status.success());
    let out = newscap(dir.path(), &["train"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("run encode first"), "{}", stderr(&out));
}

#[test]
fn rerun_is_a_no_op() {
    let dir = tempfile::tempdir().unwrap();
    let first = ingest(dir.path(), &[]);
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(stdout(&first).contains("ingest: done"));
    let manifest = std::fs::read(dir.path().join("ingest/manifest.json")).unwrap();

    let again = newscap(dir.path(), &["ingest"]);
    assert!(again.status.success(), "{}", stderr(&again));
    assert!(stdout(&again).contains("ingest: up to date"));
    assert_eq!(std::fs::read(dir.path().join("ingest/manifest.json")).unwrap(), manifest);
}

#[test]
fn changed_settings_need_force() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ingest(dir.path(), &[]).status.success());
    let changed = newscap(dir.path(), &["ingest", "--split", "0.6,0.2,0.2"]);
    assert_eq!(changed.status.code(), Some(3), "{}", stderr(&changed));
    assert!(stderr(&changed).contains("--force"));

    let forced = newscap(dir.path(), &["ingest", "--split", "0.6,0.2,0.2", "--force"]);
    assert!(forced.status.success(), "{}", stderr(&forced));
    assert!(stdout(&forced).contains("ingest: done"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(newscap(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(ingest(dir.path(), &["--split", "0.5,0.5"]).status.code(), Some(1));
    assert_eq!(newscap(dir.path(), &["evaluate", "--pred", "x.jsonl"]).status.code(), Some(1));
    assert_eq!(newscap(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn bad_corpus_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("broken.jsonl");
    std::fs::write(&corpus, "{not json\n").unwrap();
    let work = dir.path().join("work");
    let out = ingest(&work, &["--input", corpus.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn pipeline_then_standalone_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let config = data("pipeline.toml");
    let run = newscap(dir.path(), &["pipeline", "--config", config.to_str().unwrap()]);
    assert!(run.status.success(), "{}", stderr(&run));
    let text = stdout(&run);
    for strategy in ["RandIns", "CtxIns", "AttIns"] {
        assert!(text.contains(strategy), "{text}");
    }

    let again = newscap(dir.path(), &["report"]);
    assert!(stdout(&again).contains("report: up to date"));

    let pred = dir.path().join("insert/AttIns.jsonl");
    let gt = dir.path().join("evaluate/ground_truth.jsonl");
    let report = dir.path().join("standalone.json");
    let out = newscap(
        dir.path(),
        &[
            "evaluate",
            "--pred",
            pred.to_str().unwrap(),
            "--gt",
            gt.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        std::fs::read(&report).unwrap(),
        std::fs::read(dir.path().join("evaluate/AttIns.json")).unwrap()
    );
    assert!(dir.path().join("standalone.txt").is_file());
}
