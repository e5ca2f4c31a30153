use std::path::PathBuf;

use embalign_core::alignment::Match;
use embalign_core::ingest::scan_recordings_dir;
use embalign_core::pipeline::{run_analysis, total_pairs, PipelineError, RunOptions};
use embalign_core::report::{emit_report_tree, names, parse_report_json, to_canonical_json, RecordingReport};
use embalign_core::{AnalysisConfig, Dataset, TrackId, Verdict};

const STAMP: &str = "2024-01-01T00:00:00Z";

fn kanjira() -> Dataset {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/kanjira");
    scan_recordings_dir(&root).unwrap()
}

fn run(dataset: &Dataset, cfg: &AnalysisConfig, threads: usize) -> String {
    let options = RunOptions { threads: Some(threads), progress: None };
    let report = run_analysis(dataset, cfg, &options, STAMP.into()).unwrap();
    to_canonical_json(&report).unwrap()
}

#[test]
fn fixture_catalog_is_complete() {
    let d = kanjira();
    assert_eq!(d.recordings.len(), 3);
    assert!(d.recordings.values().all(|t| t.len() == 6));
    assert_eq!(d.labels.len(), 18);
    assert_eq!(d.embedding_paths.len(), 18);
    assert_eq!(d.audio_paths.len(), 18);
    assert_eq!(total_pairs(&d), 45);
    assert!(embalign_core::dataset::validate_dataset(&d).is_empty());
}

#[test]
fn report_is_independent_of_thread_count() {
    let d = kanjira();
    let cfg = AnalysisConfig { master_seed: 42, n_permutations: 200, ..AnalysisConfig::default() };
    let one = run(&d, &cfg, 1);
    assert_eq!(one, run(&d, &cfg, 3));
    assert_eq!(one, run(&d, &cfg, 8));
    let other_seed = AnalysisConfig { master_seed: 43, ..cfg };
    assert_ne!(one, run(&d, &other_seed, 2));
}

#[test]
fn report_grids_are_consistent() {
    let d = kanjira();
    let cfg = AnalysisConfig { n_permutations: 200, ..AnalysisConfig::default() };
    let report = run_analysis(&d, &cfg, &RunOptions::default(), STAMP.into()).unwrap();
    assert_eq!(report.per_recording.len(), 3);
    let mut scores = Vec::new();
    for rec in &report.per_recording {
        let k = rec.order.len();
        let p = RecordingReport::flat(&rec.p_values);
        let model = RecordingReport::flat(&rec.model);
        let human = RecordingReport::flat(rec.human.as_ref().unwrap());
        let matches = RecordingReport::flat(rec.matches.as_ref().unwrap());
        for i in 0..k {
            for j in 0..k {
                let c = i * k + j;
                assert_eq!(p[c], p[j * k + i]);
                let expected = if i == j { Verdict::I } else { Verdict::from_p_value(p[c], cfg.alpha) };
                assert_eq!(model[c], expected);
                assert_eq!(matches[c] == Match::M, model[c] == human[c]);
            }
        }
        let m = matches.iter().filter(|&&c| c == Match::M).count();
        let score = rec.score_percent.unwrap();
        assert!((score - 100.0 * m as f64 / (k * k) as f64).abs() < 1e-12);
        scores.push(score);
        assert_eq!(rec.ratings.as_ref().unwrap().len(), k);
    }
    let mean = scores.iter().sum::<f64>() / 3.0;
    assert!((report.dataset_average.unwrap() - mean).abs() < 1e-12);
}

#[test]
fn emitted_tree_round_trips() {
    let d = kanjira();
    let cfg = AnalysisConfig { n_permutations: 100, ..AnalysisConfig::default() };
    let report = run_analysis(&d, &cfg, &RunOptions::default(), STAMP.into()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_report_tree(&report, dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join(names::REPORT_JSON)).unwrap();
    assert_eq!(text, to_canonical_json(&report).unwrap());
    let back = parse_report_json(&text).unwrap();
    assert_eq!(back.per_recording.len(), 3);
    assert_eq!(back.config_echo, cfg);
    assert_eq!(to_canonical_json(&back).unwrap(), text);
    for r in 1..=3 {
        for name in [names::pvalues(r), names::model(r), names::human(r), names::matches(r), names::ratings(r)] {
            assert!(dir.path().join(&name).is_file(), "{name}");
        }
    }
}

#[test]
fn progress_reaches_every_pair() {
    let d = kanjira();
    let cfg = AnalysisConfig { n_permutations: 50, ..AnalysisConfig::default() };
    let seen = std::sync::Mutex::new(Vec::new());
    let progress = |done: usize, total: usize| seen.lock().unwrap().push((done, total));
    let options = RunOptions { threads: Some(2), progress: Some(&progress) };
    run_analysis(&d, &cfg, &options, STAMP.into()).unwrap();
    let mut seen = seen.into_inner().unwrap();
    seen.sort();
    assert_eq!(seen, (1..=45).map(|k| (k, 45)).collect::<Vec<_>>());
}

#[test]
fn invalid_inputs_stop_before_testing() {
    let mut d = kanjira();
    let cfg = AnalysisConfig::default();
    let bad = AnalysisConfig { n_permutations: 0, ..cfg };
    let err = run_analysis(&d, &bad, &RunOptions::default(), STAMP.into()).unwrap_err();
    assert_eq!(err.to_string(), "permutations must be ≥ 1");

    d.embedding_paths.remove(&TrackId::new(2, 3).unwrap());
    match run_analysis(&d, &cfg, &RunOptions::default(), STAMP.into()) {
        Err(PipelineError::Validation(v)) => assert!(v.to_string().contains("R2-V3")),
        other => panic!("expected validation failure, got {other:?}"),
    }
}

#[test]
fn partly_labeled_recordings_skip_alignment() {
    let mut d = kanjira();
    d.labels.remove(&TrackId::new(1, 4).unwrap());
    let cfg = AnalysisConfig { n_permutations: 50, ..AnalysisConfig::default() };
    let report = run_analysis(&d, &cfg, &RunOptions::default(), STAMP.into()).unwrap();
    let r1 = &report.per_recording[0];
    assert!(r1.human.is_none() && r1.matches.is_none() && r1.score_percent.is_none());
    let rest: Vec<f64> = report.per_recording[1..].iter().map(|r| r.score_percent.unwrap()).collect();
    assert!((report.dataset_average.unwrap() - (rest[0] + rest[1]) / 2.0).abs() < 1e-12);
}
