use std::collections::BTreeMap;
use std::io::{Read as _, Write as _};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use embalign_core::ingest::scan_recordings_dir;
use embalign_core::pipeline::{run_analysis, RunOptions};
use embalign_core::report::to_canonical_json;
use embalign_core::AnalysisConfig;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn embalign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_embalign"))
        .args(args)
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn copy_tree(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_tree(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), target).unwrap();
        }
    }
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn analyze_is_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    let root = fixtures().join("kanjira");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = embalign(&["analyze", "--root", s(&root), "--seed", "42", "--out", s(out), "--permutations", "300"]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("R1: 15 pairs"));
    }
    let tree = read_tree(&a);
    assert_eq!(tree.len(), 6);
    assert!(tree.contains_key("R2_pvalues.csv") && tree.contains_key("R2_model.csv"));
    assert_eq!(tree, read_tree(&b));
}

#[test]
fn align_reproduces_the_reference_score() {
    let tmp = tempfile::tempdir().unwrap();
    let o = embalign(&["align", "--root", s(&fixtures().join("table-repro")), "--out", s(tmp.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("R3 alignment: 66.66%"), "{}", stdout(&o));
    let matches = std::fs::read_to_string(tmp.path().join("R3_match.csv")).unwrap();
    assert!(matches.starts_with(",R3-V0,R3-V1,R3-V2,R3-V3,R3-V4,R3-V5\nR3-V0,M,M,M,M,M,M\n"));
    assert!(tmp.path().join("R3_human.csv").is_file());
    assert!(tmp.path().join("R3_ratings.svg").is_file());
}

#[test]
fn usage_and_runtime_errors_exit_two() {
    let root = fixtures().join("kanjira");
    let o = embalign(&["analyze", "--root", s(&root), "--permutations", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("permutations must be ≥ 1"));

    let o = embalign(&["analyze", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));

    assert_eq!(embalign(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(embalign(&["analyze", "--root", s(&root), "--alpha", "0"]).status.code(), Some(2));
    assert_eq!(embalign(&["analyze", "--root", s(&root), "--gamma", "wide"]).status.code(), Some(2));
    assert_eq!(embalign(&["scan", "--root", "/definitely/not/here"]).status.code(), Some(2));

    let help = embalign(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    for sub in ["scan", "embed", "analyze", "align", "report", "serve"] {
        assert!(stdout(&help).contains(sub));
    }
}

#[test]
fn validation_failures_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    copy_tree(&fixtures().join("kanjira"), tmp.path());
    std::fs::remove_file(tmp.path().join("Data/Embeddings/R2-V3.csv")).unwrap();
    std::fs::remove_file(tmp.path().join("Data/Recordings/R2-V3.wav")).unwrap();
    std::fs::remove_file(tmp.path().join("Data/Recordings/R1-V4.wav")).unwrap();

    let o = embalign(&["scan", "--root", s(tmp.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("variation gap at R2-V3"), "{}", stdout(&o));

    let o = embalign(&["analyze", "--root", s(tmp.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("validation errors"));

    let o = embalign(&["scan", "--root", s(&fixtures().join("kanjira"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("no issues"));
}

#[test]
fn analyze_then_align() {
    let tmp = tempfile::tempdir().unwrap();
    let root = fixtures().join("kanjira");
    let out = tmp.path().join("out");
    let o = embalign(&["align", "--root", s(&root), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("run `embalign analyze` first"));

    let o = embalign(&["analyze", "--root", s(&root), "--out", s(&out), "--permutations", "200"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = embalign(&["align", "--root", s(&root), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    for r in 1..=3 {
        assert!(text.contains(&format!("R{r} alignment: ")), "{text}");
        assert!(out.join(format!("R{r}_match.csv")).is_file());
    }
    assert!(text.contains("dataset alignment: "));
}

#[test]
fn embed_fills_in_missing_embeddings() {
    let tmp = tempfile::tempdir().unwrap();
    copy_tree(&fixtures().join("kanjira"), tmp.path());
    for id in ["R1-V0", "R3-V5"] {
        std::fs::remove_file(tmp.path().join(format!("Data/Embeddings/{id}.csv"))).unwrap();
    }
    let o = embalign(&["embed", "--root", s(tmp.path()), "--frame-size", "256", "--hop", "128"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 2, "{text}");
    for id in ["R1-V0", "R3-V5"] {
        let made = std::fs::read_to_string(tmp.path().join(format!("Data/Embeddings/{id}.csv"))).unwrap();
        let original = std::fs::read_to_string(fixtures().join(format!("kanjira/Data/Embeddings/{id}.csv"))).unwrap();
        assert_eq!(made, original, "{id}");
    }
    let o = embalign(&["embed", "--root", s(tmp.path())]);
    assert!(stdout(&o).contains("already has an embedding"));
    assert_eq!(embalign(&["scan", "--root", s(tmp.path())]).status.code(), Some(0));
}

#[test]
fn report_matches_the_library_and_honours_timestamps() {
    let tmp = tempfile::tempdir().unwrap();
    let root = fixtures().join("kanjira");
    let out = tmp.path().join("r");
    let o = embalign(&[
        "report", "--root", s(&root), "--out", s(&out), "--seed", "3", "--permutations", "150", "--timestamp",
        "2024-05-06T07:08:09Z",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let written = std::fs::read_to_string(out.join("report.json")).unwrap();
    let cfg = AnalysisConfig { master_seed: 3, n_permutations: 150, ..AnalysisConfig::default() };
    let dataset = scan_recordings_dir(&root).unwrap();
    let direct = run_analysis(&dataset, &cfg, &RunOptions::default(), "2024-05-06T07:08:09Z".into()).unwrap();
    assert_eq!(written, to_canonical_json(&direct).unwrap());
    assert_eq!(read_tree(&out).len(), 1 + 5 * 3);

    let epoch = Command::new(env!("CARGO_BIN_EXE_embalign"))
        .args(["report", "--root", s(&root), "--out", s(&out), "--permutations", "20"])
        .env("SOURCE_DATE_EPOCH", "86400")
        .output()
        .unwrap();
    assert!(epoch.status.success());
    let written = std::fs::read_to_string(out.join("report.json")).unwrap();
    assert!(written.contains("\"timestamp\": \"1970-01-02T00:00:00Z\""));
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let root = fixtures().join("kanjira");
    let conf = tmp.path().join("run.conf");
    std::fs::write(&conf, format!("root={}\npermutations=0\n", root.display())).unwrap();

    let o = embalign(&["analyze", "--config", s(&conf), "--out", s(&tmp.path().join("x"))]);
    assert_eq!(o.status.code(), Some(2), "config value applies when no flag is given");
    let o = embalign(&["analyze", "--config", s(&conf), "--permutations", "20", "--out", s(&tmp.path().join("x"))]);
    assert!(o.status.success(), "flag wins over config: {}", stderr(&o));

    std::fs::write(&conf, "permutations=20\nalpha=0.5\n").unwrap();
    let (c, f) = (tmp.path().join("c"), tmp.path().join("f"));
    embalign(&["analyze", "--root", s(&root), "--config", s(&conf), "--out", s(&c)]);
    embalign(&["analyze", "--root", s(&root), "--config", s(&conf), "--out", s(&f), "--alpha", "0.05"]);
    let at_half = stdout(&embalign(&["analyze", "--root", s(&root), "--permutations", "20", "--alpha", "0.5", "--out", s(&f)]));
    assert_eq!(read_tree(&c)["R1_pvalues.csv"], read_tree(&f)["R1_pvalues.csv"]);
    assert!(at_half.contains("alpha 0.5"));

    std::fs::write(&conf, "colour=blue\n").unwrap();
    let o = embalign(&["scan", "--root", s(&root), "--config", s(&conf)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown key"));
}

#[test]
fn serve_answers_http() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_embalign"))
        .args(["serve", "--root", s(&fixtures().join("kanjira")), "--port", &port.to_string()])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    let mut stream = loop {
        match std::net::TcpStream::connect(("127.0.0.1", port)) {
            Ok(s) => break s,
            Err(_) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(50)),
            Err(e) => {
                child.kill().ok();
                panic!("server did not start: {e}");
            }
        }
    };
    stream.write_all(b"GET /api/dataset HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").unwrap();
    let mut reply = String::new();
    stream.read_to_string(&mut reply).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(reply.starts_with("HTTP/1.1 200"), "{reply}");
    assert!(reply.contains("\"R3-V5\""));
}
