use std::fs;
use std::path::Path;

use harmlab::audit::TriState;
use harmlab::lab::{report, run, ExperimentConfig, RunOutcome};
use harmlab::Error;

fn go(dir: &Path, json: &str) -> RunOutcome {
    let cfg = ExperimentConfig::from_json(json).unwrap();
    run(&cfg, dir).unwrap()
}

fn artifact_bytes(out: &RunOutcome, base: &Path) -> Vec<(String, Vec<u8>)> {
    out.manifest
        .artifacts
        .iter()
        .map(|a| {
            let p = if a.is_absolute() { a.clone() } else { base.join(a) };
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect()
}

const SOLVE: &str = r#"{"name": "pair", "output_dir": "out", "experiment":
    {"kind": "solve", "set": {"points": [[-1, 0], [1, 0]]}, "start": [0, 5], "tolerance": 1e-8}}"#;

const SWEEP: &str = r#"{"name": "sweep", "seed": 4, "output_dir": "out", "experiment":
    {"kind": "spectrum-sweep", "delta": 0.5, "big_k": [3, 4], "betas": [2, 3]}}"#;

const MC: &str = r#"{"name": "walks", "seed": 11, "output_dir": "out", "experiment":
    {"kind": "mc", "set": {"points": [[0, 0, 0], [2, 0, 0]]}, "start": [1, 1, 0], "walks": 3000}}"#;

#[test]
fn reruns_reproduce_artifacts_byte_for_byte() {
    for json in [SOLVE, SWEEP, MC] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let first = go(a.path(), json);
        let second = go(b.path(), json);
        assert_eq!(first.exit_code(), 0, "{:?}", first.manifest.violations());
        assert!(!first.manifest.artifacts.is_empty());
        let base_a = a.path().join("out");
        let base_b = b.path().join("out");
        assert_eq!(artifact_bytes(&first, &base_a), artifact_bytes(&second, &base_b));
        assert_eq!(first.manifest.config_hash, second.manifest.config_hash);
        assert_eq!(first.manifest.summary, second.manifest.summary);
        assert!(first.manifest_path.ends_with("manifest.json"));
        assert!(first.manifest_path.exists());
    }
}

#[test]
fn solve_run_writes_the_two_point_law() {
    let dir = tempfile::tempdir().unwrap();
    let out = go(dir.path(), SOLVE);
    let csv = fs::read_to_string(dir.path().join("out").join("dist.csv")).unwrap();
    let rows: Vec<f64> = csv
        .lines()
        .filter_map(|l| l.split_once("\",")?.1.split(',').next()?.parse().ok())
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|v| (v - 0.5).abs() < 1e-6), "{csv}");
    assert_eq!(out.manifest.d, Some(2));
    assert!(out.manifest.checks.iter().all(|c| c.status == TriState::Pass));
}

#[test]
fn capped_walks_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let json = r#"{"output_dir": "capped", "experiment":
        {"kind": "mc", "set": {"points": [[0, 0]]}, "start": [30, 0], "walks": 500, "max_steps": 10}}"#;
    let out = go(dir.path(), json);
    assert!(out.manifest.warnings.iter().any(|w| w.contains("cap")), "{:?}", out.manifest.warnings);
}

#[test]
fn failing_content_condition_is_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let json = r#"{"output_dir": "tree", "experiment":
        {"kind": "tree-audit", "set": {"points": [[0, 0], [5, 7], [40, 3]]},
         "audit": {"l": 12, "rho": 1.5, "delta": 0.05, "q": 0.5, "k_star": 2}}}"#;
    let out = go(dir.path(), json);
    assert!(out.manifest.warnings.iter().any(|w| w.contains("content condition")), "{:?}", out.manifest.warnings);
    assert!(out.manifest.checks.iter().any(|c| c.name == "tree invariants" && c.status == TriState::Pass));
}

#[test]
fn violated_bounds_set_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let json = r#"{"output_dir": "chain", "experiment":
        {"kind": "cantor-audit", "delta": 0.5, "k": 1, "big_k": [3, 4], "c": 1.0, "c_tilde": 1000.0}}"#;
    let out = go(dir.path(), json);
    assert!(!out.manifest.violations().is_empty());
    assert_eq!(out.exit_code(), 1);
}

#[test]
fn report_rejects_mixed_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let plane = go(&dir.path().join("a"), SOLVE).manifest;
    let space = go(&dir.path().join("b"), MC).manifest;
    assert!(matches!(report(&[plane.clone(), space]), Err(Error::DimensionMismatch { expected: 2, got: 3 })));
    let sweep = go(&dir.path().join("c"), SWEEP).manifest;
    let r = report(&[plane, sweep]).unwrap();
    assert_eq!(r.runs.len(), 2);
    assert!(!r.failed());
    assert!(!r.fits.is_empty());
    assert!(r.to_markdown().contains("sweep"));
}

#[test]
fn config_errors_name_the_field() {
    let cases = [
        (r#"{"experiment": {"kind": "spectrum-sweep", "delta": -0.5, "big_k": [3, 4], "betas": [2]}}"#, "experiment.delta"),
        (r#"{"experiment": {"kind": "solve", "set": {"points": [[0, 0]]}, "tolerance": "tight"}}"#, "experiment.tolerance"),
        (r#"{"experiment": {"kind": "warp"}}"#, "experiment.kind"),
        (r#"{"experiment": {"set": {"points": [[0, 0]]}}}"#, "experiment.kind"),
        (r#"{"experimnt": {}}"#, ""),
    ];
    for (json, want) in cases {
        match ExperimentConfig::from_json(json) {
            Err(Error::Config { path, .. }) => assert!(path.starts_with(want), "{json}: got path {path}"),
            other => panic!("{json}: expected a config error, got {other:?}"),
        }
    }
}
