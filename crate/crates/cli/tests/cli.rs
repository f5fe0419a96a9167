use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use openindex_core::fixtures::{synthetic_crossref, StubServer};
use openindex_core::store::{dump, Store};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn bin(cwd: &Path) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_openindex"));
    c.current_dir(cwd);
    for (k, _) in std::env::vars() {
        if k.starts_with("OPENINDEX_") {
            c.env_remove(k);
        }
    }
    c.env("OPENINDEX_SYNC_WRITES", "false");
    c
}

fn run(cwd: &Path, args: &[&str]) -> (i32, Value, String) {
    let out: Output = bin(cwd).args(args).arg("--json").output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 1, "expected one JSON line, got {stdout:?}");
    (out.status.code().unwrap(), serde_json::from_str(lines[0]).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn ingest(dir: &Path, source: &str, input: &Path) -> (i32, Value) {
    let (code, v, _) = run(dir, &["--data-dir", "store", "ingest", "--source", source, "--input", input.to_str().unwrap()]);
    (code, v)
}

#[test]
fn ingest_is_idempotent_and_counts_rejections() {
    let dir = tempfile::tempdir().unwrap();
    let works = fixtures().join("works_10.jsonl");
    let (code, v) = ingest(dir.path(), "crossref", &works);
    assert_eq!((code, v["created"].as_u64(), v["rejected"].as_u64()), (0, Some(10), Some(0)));
    let (code, v) = ingest(dir.path(), "crossref", &works);
    assert_eq!((code, v["updated"].as_u64(), v["created"].as_u64()), (0, Some(10), Some(0)));

    let mut text = std::fs::read_to_string(&works).unwrap();
    text.push_str("{\"DOI\": \"10.5555/broken\", \"title\": [\n");
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, text).unwrap();
    let report = dir.path().join("report.jsonl");
    let (code, v, _) = run(
        dir.path(),
        &["--data-dir", "store", "ingest", "--source", "crossref", "--input", bad.to_str().unwrap(), "--report", report.to_str().unwrap()],
    );
    assert_eq!((code, v["rejected"].as_u64(), v["read"].as_u64()), (3, Some(1), Some(11)));
    let lines = std::fs::read_to_string(report).unwrap();
    assert_eq!(lines.lines().count(), 11);
    assert!(lines.lines().last().unwrap().contains("\"rejected\""));
}

#[test]
fn pubmed_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = ingest(dir.path(), "pubmed", &fixtures().join("pubmed_sample.xml"));
    assert_eq!((code, v["created"].as_u64()), (0, Some(3)));
}

#[test]
fn unreadable_input_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = ingest(dir.path(), "crossref", &dir.path().join("missing.jsonl"));
    assert_eq!((code, v["error"].as_str()), (2, Some("input")));
}

#[test]
fn locked_store_is_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let _held = Store::open(dir.path().join("store")).unwrap();
    let (code, v) = ingest(dir.path(), "crossref", &fixtures().join("works_10.jsonl"));
    assert_eq!((code, v["error"].as_str()), (4, Some("busy")));
}

#[test]
fn harvest_to_exhaustion() {
    let dir = tempfile::tempdir().unwrap();
    let server = StubServer::start(synthetic_crossref(250, 31)).unwrap();
    let (code, v, _) = run(dir.path(), &["--data-dir", "store", "harvest", "--endpoint", &server.base_url(), "--rows", "100"]);
    assert_eq!((code, v["created"].as_u64(), v["pages"].as_u64()), (0, Some(250), Some(3)));

    let empty = StubServer::start(vec![]).unwrap();
    let (code, v, _) = run(dir.path(), &["--data-dir", "empty", "harvest", "--endpoint", &empty.base_url()]);
    assert_eq!((code, v["created"].as_u64()), (0, Some(0)));
}

#[test]
fn harvest_resumes_after_transport_failure() {
    let dir = tempfile::tempdir().unwrap();
    let server = StubServer::start(synthetic_crossref(250, 32)).unwrap();
    server.fail_after(2);
    let out = bin(dir.path())
        .args(["--data-dir", "store", "--json", "harvest", "--endpoint", &server.base_url(), "--rows", "50"])
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(5), "{v}");
    assert_eq!(v["created"].as_u64(), Some(100));
    let cursor = v["cursor"].as_str().unwrap().to_owned();
    server.heal();
    let (code, v, _) = run(dir.path(), &["--data-dir", "store", "harvest", "--endpoint", &server.base_url(), "--rows", "50", "--cursor", &cursor]);
    assert_eq!((code, v["created"].as_u64(), v["updated"].as_u64()), (0, Some(150), Some(0)));
    let (_, stats, _) = run(dir.path(), &["--data-dir", "store", "stats"]);
    assert_eq!(stats["counts"]["works"], 250);
}

#[test]
fn dump_load_dump_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    ingest(dir.path(), "crossref", &fixtures().join("works_10.jsonl"));
    let (code, _, _) = run(dir.path(), &["--data-dir", "store", "dump", "--out", "d1"]);
    assert_eq!(code, 0);
    let (code, v, _) = run(dir.path(), &["--data-dir", "fresh", "load", "--in", "d1"]);
    assert_eq!((code, v["records"]["works"].as_u64()), (0, Some(10)));
    run(dir.path(), &["--data-dir", "fresh", "dump", "--out", "d2"]);
    assert_eq!(dump::data_files(&dir.path().join("d1")).unwrap(), dump::data_files(&dir.path().join("d2")).unwrap());
    let (code, v, _) = run(dir.path(), &["--data-dir", "fresh", "load", "--in", "d1"]);
    assert_eq!((code, v["error"].as_str()), (7, Some("dump")));
    let (code, v, _) = run(dir.path(), &["--data-dir", "fresh", "validate"]);
    assert_eq!((code, v["violations"].as_u64()), (0, Some(0)));
}

#[test]
fn stats_reports_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let toml = format!("concept_tree = {:?}\n", fixtures().join("tree_full_shape.jsonl").to_str().unwrap());
    std::fs::write(dir.path().join("openindex.toml"), toml).unwrap();
    ingest(dir.path(), "crossref", &fixtures().join("works_10.jsonl"));
    let (code, v, _) = run(dir.path(), &["--data-dir", "store", "stats"]);
    assert_eq!(code, 0);
    assert_eq!(v["counts"]["works"], 10);
    assert_eq!(v["external_id_coverage"]["works"]["fraction"], 1.0);
    assert_eq!(v["concept_coverage"]["works"], 10);
    assert!(v["concept_coverage"]["fraction"].as_f64().is_some());
}

#[test]
fn bad_config_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "colour = 1\n").unwrap();
    let (code, v, _) = run(dir.path(), &["--config", "c.toml", "stats"]);
    assert_eq!((code, v["error"].as_str()), (2, Some("config")));
    let (code, _, _) = run(dir.path(), &["--config", "absent.toml", "stats"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(dir.path(), &["--set", "author_threshold=2", "stats"]);
    assert_eq!(code, 2);
}

/// Every combination of file, environment and flag settings for
/// `data_dir`: the highest layer present decides where the store lands.
#[test]
fn config_precedence_matrix() {
    for mask in 0..8u8 {
        let (file, env, flag) = (mask & 1 != 0, mask & 2 != 0, mask & 4 != 0);
        let dir = tempfile::tempdir().unwrap();
        if file {
            std::fs::write(dir.path().join("openindex.toml"), "data_dir = \"from-file\"\n").unwrap();
        }
        let mut cmd = bin(dir.path());
        if env {
            cmd.env("OPENINDEX_DATA_DIR", "from-env");
        }
        if flag {
            cmd.args(["--data-dir", "from-flag"]);
        }
        let out = cmd.args(["--json", "stats"]).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        let expected = if flag {
            "from-flag"
        } else if env {
            "from-env"
        } else if file {
            "from-file"
        } else {
            "openindex-data"
        };
        for candidate in ["from-flag", "from-env", "from-file", "openindex-data"] {
            assert_eq!(dir.path().join(candidate).exists(), candidate == expected, "mask {mask:03b}: {candidate}");
        }
    }
}
