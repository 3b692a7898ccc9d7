//! Behavioural contract of the `colloquy` binary: one-line status JSON on
//! success, one-line error JSON with a stable `kind` on failure, config
//! file < flag precedence, and rerun stability.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn fixture(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
        .to_str()
        .expect("utf8 path")
        .to_owned()
}

struct Run {
    status: serde_json::Value,
    exit_ok: bool,
    stdout: String,
}

fn colloquy(args: &[&str]) -> Run {
    let output = Command::new(env!("CARGO_BIN_EXE_colloquy"))
        .args(args)
        .output()
        .expect("binary runs");
    let stdout = String::from_utf8(output.stdout).expect("utf8 stdout");
    let status = serde_json::from_str(stdout.trim())
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {stdout:?}"));
    Run { status, exit_ok: output.status.success(), stdout }
}

#[test]
fn success_prints_one_status_line_and_lists_real_outputs() {
    let out = tempfile::tempdir().unwrap();
    let run = colloquy(&[
        "ingest",
        "--corpus",
        &fixture("structured_like/structured_like.json"),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert!(run.exit_ok);
    assert_eq!(run.stdout.trim_end_matches('\n').lines().count(), 1, "exactly one stdout line");
    assert_eq!(run.status["status"], "ok");
    assert_eq!(run.status["command"], "ingest");
    assert_eq!(run.status["testimonies"], 4);
    let outputs = run.status["outputs"].as_array().expect("outputs array");
    assert!(!outputs.is_empty());
    for path in outputs {
        assert!(
            PathBuf::from(path.as_str().unwrap()).is_file(),
            "listed output {path} was not written"
        );
    }
}

#[test]
fn failures_print_one_error_line_with_a_stable_kind() {
    let cases: &[(&[&str], &str)] = &[
        (&["ingest", "--corpus", "/no/such/manifest.json"], "corpus"),
        (&["compare", "--corpus-b", "x.json"], "config"), // corpus_a missing
        (&["synth", "--preset", "nope"], "config"),
        (&["synth"], "config"),
        (&["classify", "--corpus-a", "x.json", "--mode", "sometimes"], "config"),
        (&["compare", "--corpus-a", "x.json", "--corpus-b", "y.json", "--alpha", "7"], "config"),
    ];
    for (args, kind) in cases {
        let run = colloquy(args);
        assert!(!run.exit_ok, "{args:?} must exit non-zero");
        assert_eq!(run.stdout.trim_end_matches('\n').lines().count(), 1);
        assert_eq!(run.status["status"], "error", "{args:?}");
        assert_eq!(run.status["kind"], *kind, "{args:?}: {}", run.status);
        assert!(run.status["message"].as_str().is_some_and(|m| !m.is_empty()));
    }
}

#[test]
fn config_file_is_used_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.json");
    let out_dir = dir.path().join("out");
    fs::write(
        &config_path,
        serde_json::json!({
            "corpus_a": fixture("structured_like/structured_like.json"),
            "out_dir": out_dir,
            "k": 10,
        })
        .to_string(),
    )
    .unwrap();

    let from_file =
        colloquy(&["classify", "--config", config_path.to_str().unwrap()]);
    assert!(from_file.exit_ok, "{}", from_file.status);
    assert_eq!(from_file.status["k"], 10, "k comes from the config file");

    let overridden =
        colloquy(&["classify", "--config", config_path.to_str().unwrap(), "--k", "12"]);
    assert!(overridden.exit_ok);
    assert_eq!(overridden.status["k"], 12, "explicit flag beats the config file");

    let bad = colloquy(&["classify", "--config", "/no/such/config.json"]);
    assert!(!bad.exit_ok);
    assert_eq!(bad.status["kind"], "config");
}

#[test]
fn synth_plain_text_corpus_reloads_with_identical_totals() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let made = colloquy(&[
        "synth", "--preset", "yale_like", "--testimonies", "2", "--plain", "--seed", "5",
        "--out", out,
    ]);
    assert!(made.exit_ok);
    let manifest = made.status["manifest"].as_str().unwrap().to_owned();
    assert!(manifest.ends_with("yale_like/yale_like.json"));

    let back = colloquy(&["ingest", "--corpus", &manifest, "--out", out]);
    assert!(back.exit_ok);
    assert_eq!(back.status["testimonies"], made.status["testimonies"]);
    assert_eq!(back.status["total_words"], made.status["total_words"]);
}

#[test]
fn reruns_into_the_same_directory_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = [
        "topics",
        "--corpus-a",
        &fixture("freeform_like/freeform_like.json"),
        "--out",
        out,
    ];

    let first = colloquy(&args);
    assert!(first.exit_ok, "{}", first.status);
    let snapshot: Vec<(PathBuf, Vec<u8>)> = first.status["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| {
            let path = PathBuf::from(p.as_str().unwrap());
            let bytes = fs::read(&path).expect("output exists");
            (path, bytes)
        })
        .collect();

    // The second run resumes from the label store and rewrites the tables.
    let second = colloquy(&args);
    assert!(second.exit_ok);
    assert_eq!(first.status, second.status);
    for (path, bytes) in snapshot {
        assert_eq!(fs::read(&path).unwrap(), bytes, "{} changed across reruns", path.display());
    }
}
