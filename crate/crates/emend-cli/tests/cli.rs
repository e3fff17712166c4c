//! Integration tests for the `emend` binary: exit codes, output formats,
//! corpus handling. The consolidation behavior itself is covered by the
//! acceptance suite; here we drive the command surface.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn emend() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_emend"));
    cmd.env_remove("EMEND_CORPUS");
    cmd
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

/// A scratch directory holding a copy of the worked-example corpus.
fn scratch_corpus() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().expect("tempdir");
    let corpus = dir.path().join("corpus.json");
    std::fs::copy(fixture("corpus.json"), &corpus).expect("fixture copies");
    (dir, corpus)
}

/// Compiles the worked act into `dir` and returns the program path.
fn compiled_program(corpus: &Path, dir: &Path) -> PathBuf {
    let program = dir.join("program.dsl");
    let out = emend()
        .arg("--corpus")
        .arg(corpus)
        .args(["compile", "fr/loi/2022-1348/1/20221025", "--out"])
        .arg(&program)
        .output()
        .expect("compile spawns");
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    program
}

// --- corpus lifecycle --------------------------------------------------------

#[test]
fn init_creates_an_empty_corpus_and_refuses_to_clobber() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("fresh.json");

    let out = emend().arg("--corpus").arg(&corpus).arg("init").output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&corpus).unwrap()).unwrap();
    assert_eq!(parsed["documents"].as_array().map(Vec::len), Some(0));

    let out = emend().arg("--corpus").arg(&corpus).arg("init").output().unwrap();
    assert_eq!(code(&out), 2, "second init must not overwrite");
    assert!(stderr(&out).contains("already exists"), "{}", stderr(&out));
}

#[test]
fn ingest_merges_documents_and_rejects_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.json");
    let out = emend().arg("--corpus").arg(&corpus).arg("init").output().unwrap();
    assert_eq!(code(&out), 0);

    let out = emend()
        .arg("--corpus")
        .arg(&corpus)
        .arg("ingest")
        .arg(fixture("corpus.json"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("added 2 version(s)"), "{}", stderr(&out));

    let out = emend()
        .arg("--corpus")
        .arg(&corpus)
        .args(["show", "fr/code/commerce/L723-4", "--date", "2021-10-13"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    // The same versions a second time collide on their dates.
    let out = emend()
        .arg("--corpus")
        .arg(&corpus)
        .arg("ingest")
        .arg(fixture("corpus.json"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn missing_corpus_is_a_data_error() {
    let out = emend().args(["timeline", "fr/code/commerce/L723-4"]).output().unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("no corpus file"), "{}", stderr(&out));

    let out = emend()
        .args(["--corpus", "/nonexistent/corpus.json", "timeline", "fr/code/commerce/L723-4"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn corpus_env_variable_is_a_fallback() {
    let (_dir, corpus) = scratch_corpus();
    let out = emend()
        .env("EMEND_CORPUS", &corpus)
        .args(["timeline", "fr/code/commerce/L723-4"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out), "2021-10-13\n");

    // An explicit --corpus wins over the environment.
    let out = emend()
        .env("EMEND_CORPUS", "/nonexistent/corpus.json")
        .arg("--corpus")
        .arg(&corpus)
        .args(["timeline", "fr/code/commerce/L723-4"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

// --- argument handling ---------------------------------------------------------

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    let out = emend().arg("definitely-not-a-command").output().unwrap();
    assert_eq!(code(&out), 1);

    let out = emend().args(["compile"]).output().unwrap();
    assert_eq!(code(&out), 1, "missing required argument is a usage error");

    let out = emend().arg("--help").output().unwrap();
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("Consolidation engine"));
}

// --- compile -------------------------------------------------------------------

#[test]
fn compile_writes_the_program_and_reports_coverage() {
    let (dir, corpus) = scratch_corpus();
    let program = compiled_program(&corpus, dir.path());
    let text = std::fs::read_to_string(&program).unwrap();
    assert!(text.starts_with("s = db.get_version(\"fr/loi/2022-1348/1\""));

    // Without --out the program goes to stdout, the coverage to stderr.
    let out = emend()
        .arg("--corpus")
        .arg(&corpus)
        .args(["compile", "fr/loi/2022-1348/1/20221025"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), text);
    assert!(stderr(&out).contains("compiled 7/7 instructions (100.0%)"), "{}", stderr(&out));
}

#[test]
fn undated_compile_takes_a_date_flag_or_the_latest_version() {
    let (_dir, corpus) = scratch_corpus();
    let dated = emend()
        .arg("--corpus")
        .arg(&corpus)
        .args(["compile", "fr/loi/2022-1348/1/20221025"])
        .output()
        .unwrap();
    assert_eq!(code(&dated), 0);

    let by_flag = emend()
        .arg("--corpus")
        .arg(&corpus)
        .args(["compile", "fr/loi/2022-1348/1", "--date", "2022-10-25"])
        .output()
        .unwrap();
    assert_eq!(code(&by_flag), 0);
    assert_eq!(stdout(&by_flag), stdout(&dated));

    let latest = emend()
        .arg("--corpus")
        .arg(&corpus)
        .args(["compile", "fr/loi/2022-1348/1"])
        .output()
        .unwrap();
    assert_eq!(code(&latest), 0);
    assert_eq!(stdout(&latest), stdout(&dated));
}

#[test]
fn custom_pattern_table_replaces_the_built_in() {
    let (_dir, corpus) = scratch_corpus();
    let shipped =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../emend-core/patterns/english.json");

    let out = emend()
        .arg("--corpus")
        .arg(&corpus)
        .arg("--patterns")
        .arg(&shipped)
        .args(["compile", "fr/loi/2022-1348/1/20221025"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out), std::fs::read_to_string(fixture("golden_program.txt")).unwrap());

    let out = emend()
        .arg("--corpus")
        .arg(&corpus)
        .args(["--patterns", "/nonexistent/patterns.json"])
        .args(["compile", "fr/loi/2022-1348/1/20221025"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

// --- run -------------------------------------------------------------------------

#[test]
fn dry_run_executes_without_saving() {
    let (dir, corpus) = scratch_corpus();
    let program = compiled_program(&corpus, dir.path());
    let before = std::fs::read_to_string(&corpus).unwrap();

    let out = emend()
        .arg("--corpus")
        .arg(&corpus)
        .arg("run")
        .arg(&program)
        .arg("--dry-run")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("8 ops applied; committed"), "{}", stderr(&out));
    assert_eq!(std::fs::read_to_string(&corpus).unwrap(), before, "dry run must not save");

    let out = emend().arg("--corpus").arg(&corpus).arg("run").arg(&program).output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("created fr/code/commerce/L723-4/20221026"), "{}", stderr(&out));
    assert_ne!(std::fs::read_to_string(&corpus).unwrap(), before, "real run saves");
}

#[test]
fn failing_run_exits_two_and_leaves_the_corpus_alone() {
    let (dir, corpus) = scratch_corpus();
    let program = dir.path().join("doomed.dsl");
    std::fs::write(
        &program,
        concat!(
            "s = db.get_version(\"fr/loi/2022-1348/1\", Date(2022, 10, 25))\n",
            "t = db.get_version(\"fr/code/commerce/L723-4\", Date(2022, 10, 25))\n",
            "v1 = t.new_version(Date(2022, 10, 26))\n",
            "pI = s.par(\"I\")\n",
            "v1.schedule_changes(s, [\n",
            "    v1.suppress(pI.par(\"1\"), v1.par(\"99°\"), (\"word\", 1))\n",
            "])\n",
            "v1 = db.add_version(v1.apply_changes())\n",
        ),
    )
    .unwrap();
    let before = std::fs::read_to_string(&corpus).unwrap();

    let out = emend().arg("--corpus").arg(&corpus).arg("run").arg(&program).output().unwrap();
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("failed at block 1, op 1:"), "{err}");
    assert!(err.contains("rolled back"), "{err}");
    assert_eq!(std::fs::read_to_string(&corpus).unwrap(), before, "failed run must not save");

    // A program that does not even parse is a data error too.
    std::fs::write(&program, "s = db.fetch(").unwrap();
    let out = emend().arg("--corpus").arg(&corpus).arg("run").arg(&program).output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn run_reports_json_when_asked() {
    let (dir, corpus) = scratch_corpus();
    let program = compiled_program(&corpus, dir.path());

    let out = emend()
        .arg("--corpus")
        .arg(&corpus)
        .args(["--json", "run"])
        .arg(&program)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let payload: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(payload["committed"], true);
    assert_eq!(payload["applied"], 8);
    assert_eq!(
        payload["created"],
        serde_json::json!([
            "fr/code/commerce/L723-4/20221026",
            "fr/code/commerce/L723-4/20230101",
        ])
    );
}

// --- inspection ------------------------------------------------------------------

#[test]
fn show_prints_the_tree_and_json() {
    let (_dir, corpus) = scratch_corpus();
    let out = emend()
        .arg("--corpus")
        .arg(&corpus)
        .args(["show", "fr/code/commerce/L723-4", "--date", "2021-10-13"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("fr/code/commerce/L723-4 (in force from 2021-10-13)\n"), "{text}");
    assert!(text.contains("1° Registered on the electoral lists"), "{text}");

    let out = emend()
        .arg("--corpus")
        .arg(&corpus)
        .args(["--json", "show", "fr/code/commerce/L723-4", "--date", "2021-10-13"])
        .output()
        .unwrap();
    let payload: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(payload["id"], "fr/code/commerce/L723-4");
    assert_eq!(payload["date"], "2021-10-13");
    assert_eq!(payload["body"][1]["label"], "1°");

    // Asking for a date before any version is a data error.
    let out = emend()
        .arg("--corpus")
        .arg(&corpus)
        .args(["show", "fr/code/commerce/L723-4", "--date", "1999-01-01"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("no version in force on 1999-01-01"), "{}", stderr(&out));
}

#[test]
fn timeline_and_diff_track_the_consolidation() {
    let (dir, corpus) = scratch_corpus();
    let program = compiled_program(&corpus, dir.path());
    let out = emend().arg("--corpus").arg(&corpus).arg("run").arg(&program).output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let out = emend()
        .arg("--corpus")
        .arg(&corpus)
        .args(["timeline", "fr/code/commerce/L723-4"])
        .output()
        .unwrap();
    assert_eq!(
        stdout(&out),
        concat!(
            "2021-10-13\n",
            "2022-10-26  (produced by fr/loi/2022-1348/1/20221025)\n",
            "2023-01-01  (produced by fr/loi/2022-1348/1/20221025)\n",
        )
    );

    let out = emend()
        .arg("--corpus")
        .arg(&corpus)
        .args(["--json", "timeline", "fr/code/commerce/L723-4"])
        .output()
        .unwrap();
    let payload: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(payload.as_array().map(Vec::len), Some(3));
    assert_eq!(payload[0]["provenance"], serde_json::Value::Null);

    // Between the two consolidated versions only one paragraph changed.
    let out = emend()
        .arg("--corpus")
        .arg(&corpus)
        .args(["diff", "fr/code/commerce/L723-4", "--from", "2022-10-26", "--to", "2023-01-01"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out), "II. > 2°: text changed\n");

    let out = emend()
        .arg("--corpus")
        .arg(&corpus)
        .args(["diff", "fr/code/commerce/L723-4", "--from", "2023-01-01", "--to", "2023-06-01"])
        .output()
        .unwrap();
    assert_eq!(stdout(&out), "no changes\n");

    let out = emend()
        .arg("--corpus")
        .arg(&corpus)
        .args([
            "--json",
            "diff",
            "fr/code/commerce/L723-4",
            "--from",
            "2022-10-26",
            "--to",
            "2023-01-01",
        ])
        .output()
        .unwrap();
    let payload: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(payload[0]["change"], "text_changed");
    assert_eq!(payload[0]["path"], serde_json::json!(["II.", "2°"]));
}
