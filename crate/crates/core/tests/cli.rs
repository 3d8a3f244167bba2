use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use multiplex_market::cli::{EnsembleSummary, RunManifest};

const SMALL: [&str; 6] = ["--side", "10", "--transient_steps", "200", "--record_steps", "400"];

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multiplex-market"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn error_json(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("an error line");
    serde_json::from_str(line).expect("error line is JSON")
}

fn run_small(dir: &Path, extra: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec!["run", "--out", out];
    args.extend_from_slice(&SMALL);
    args.extend_from_slice(extra);
    bin(&args)
}

#[test]
fn invalid_side_reports_key() {
    let out = bin(&["run", "--side", "0", "--out", "unused"]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["error"], "config");
    assert_eq!(err["key"], "side");
}

#[test]
fn unparsable_value_is_a_config_error() {
    let out = bin(&["run", "--delta", "abc", "--out", "unused"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["key"], "delta");
}

#[test]
fn analyze_without_prices_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["analyze", "--run", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"], "missing_input");
}

#[test]
fn run_writes_artifacts_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_small(dir.path(), &["--seed", "3", "--seed", "8", "--delta", "0.03"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    for seed in ["seed-3", "seed-8"] {
        let prices = fs::read_to_string(dir.path().join(seed).join("prices.csv")).unwrap();
        assert_eq!(prices.lines().next(), Some("t,p1,p2,p_avg"));
        assert_eq!(prices.lines().count(), 1 + 400);
        for f in ["avalanches.csv", "books.csv", "agents.csv", "tallies.csv", "pdf.csv", "config.txt"] {
            assert!(dir.path().join(seed).join(f).is_file(), "{seed}/{f}");
        }
    }
    let manifest = RunManifest::load(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(manifest.seeds, vec![3, 8]);
    assert_eq!(manifest.config.delta, 0.03);
    let summary: EnsembleSummary =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.runs.len(), 2);
    assert!(summary.series.contains_key("p12"));

    let replay = tempfile::tempdir().unwrap();
    let manifest_path = dir.path().join("manifest.json");
    let out = bin(&[
        "run",
        "--manifest",
        manifest_path.to_str().unwrap(),
        "--out",
        replay.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read(dir.path().join("seed-8/prices.csv")).unwrap(),
        fs::read(replay.path().join("seed-8/prices.csv")).unwrap()
    );
}

#[test]
fn analyze_regenerates_pdf() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_small(dir.path(), &[]).status.success());
    let run_dir = dir.path().join("seed-1");
    fs::remove_file(run_dir.join("pdf.csv")).unwrap();
    let out = bin(&["analyze", "--run", run_dir.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(run_dir.join("pdf.csv").is_file());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("p12"));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("market.cfg");
    fs::write(&cfg_path, "# small market\nside = 10\ndelta = 0.02\ntransient_steps = 50\nrecord_steps = 100\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = bin(&[
        "run",
        "--config",
        cfg_path.to_str().unwrap(),
        "--delta",
        "0.01",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let written = fs::read_to_string(out_dir.join("seed-1/config.txt")).unwrap();
    assert!(written.lines().any(|l| l == "delta = 0.01"), "{written}");
    assert!(written.lines().any(|l| l == "side = 10"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.cfg");
    fs::write(&cfg_path, "sidee = 10\n").unwrap();
    let out = bin(&["run", "--config", cfg_path.to_str().unwrap(), "--out", "unused"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["key"], "sidee");
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--param", "delta", "--values", "0,0.03", "--out", dir.path().to_str().unwrap()];
    args.extend_from_slice(&SMALL);
    let out = bin(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("delta=0/seed-1/prices.csv").is_file());
    assert!(dir.path().join("delta=0.03/manifest.json").is_file());
    assert!(dir.path().join("sweep.json").is_file());
}
