//! Command-line behaviour: exit codes, flag overrides and report contents.

use std::path::Path;
use std::process::{Command, Output};

use squeezed_records::config::{load_config_str, Scenario, ScenarioConfig};
use squeezed_records::scenario::{data_files, run_scenario, RunReport, REPORT_FILE};
use squeezed_records::Error;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_squeezed-records"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

fn report(dir: &Path) -> RunReport {
    serde_json::from_str(&std::fs::read_to_string(dir.join(REPORT_FILE)).unwrap()).unwrap()
}

#[test]
fn passing_scenario_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&[
        "--scenario",
        "toy-ghz",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = report(dir.path());
    assert!(r.passed);
    assert_eq!(r.scenario, Scenario::ToyGhz);
    assert!(dir.path().join("toy_ghz.json").exists());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("[pass] ghz_records"));
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&[
        "--scenario",
        "radiation-linear",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(dir.path());
    assert!(!r.passed);
    assert!(r.failed_checks().any(|c| c.name == "approximate_kernel"));
}

#[test]
fn bad_input_exits_two() {
    assert_eq!(cli(&[]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "scenario = \"toy-ghz\"\n[epoch]\ntau_f = 0.5\n").unwrap();
    let out = cli(&["--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tau_f"));
    // Unknown scenario names are rejected by the argument parser.
    assert_eq!(cli(&["--scenario", "nope"]).status.code(), Some(2));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.toml");
    let out_dir = dir.path().join("out");
    std::fs::write(
        &path,
        "scenario = \"hermite-demo\"\nseed = 5\nout_dir = \"elsewhere\"\n",
    )
    .unwrap();
    let out = cli(&[
        "--config",
        path.to_str().unwrap(),
        "--scenario",
        "toy-ghz",
        "--seed",
        "11",
        "--workers",
        "2",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = report(&out_dir);
    assert_eq!(r.scenario, Scenario::ToyGhz);
    assert_eq!(r.seed, 11);
}

#[test]
fn parse_errors_carry_positions() {
    let err = load_config_str("scenario = \"toy-ghz\"\n\n[records]\neta = \"x\"\n").unwrap_err();
    match err {
        Error::Parse { line, .. } => assert_eq!(line, 4),
        other => panic!("unexpected {other:?}"),
    }
    let err = load_config_str("scenario = \"toy-ghz\"\n[epoch]\ntau_f = 1\n[records]\neta = -1\n")
        .unwrap_err();
    match err {
        Error::Validation(v) => assert!(v.len() >= 2, "{v:?}"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn report_lists_artifacts_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ScenarioConfig::new(Scenario::HermiteDemo);
    cfg.out_dir = dir.path().to_path_buf();
    let r = run_scenario(&cfg).unwrap();
    assert_eq!(r.config_hash, cfg.hash());
    let mut names: Vec<String> = data_files(dir.path())
        .unwrap()
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    let mut artifacts = r.artifacts.clone();
    names.sort();
    artifacts.sort();
    assert_eq!(names, artifacts);
    assert!(r.checks.iter().all(|c| c.value.is_finite()));
}

#[test]
fn worker_count_does_not_change_output() {
    let mut cfg = ScenarioConfig::new(Scenario::RadiationRecords);
    cfg.records.n_seeds = 64;
    let read = |workers: usize| {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg.clone();
        c.workers = workers;
        c.out_dir = dir.path().to_path_buf();
        run_scenario(&c).unwrap();
        data_files(dir.path())
            .unwrap()
            .iter()
            .map(|p| std::fs::read(p).unwrap())
            .collect::<Vec<_>>()
    };
    let one = read(1);
    assert!(!one.is_empty());
    assert_eq!(one, read(3));
    assert_eq!(one, read(8));
}

#[test]
fn fuzz_corpus_seeds() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/config_parse");
    let valid = ["minimal.toml", "records.toml", "inflation.toml", "toy.toml"];
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let result = load_config_str(&std::fs::read_to_string(&path).unwrap());
        assert_eq!(
            result.is_ok(),
            valid.contains(&name.as_str()),
            "{name}: {result:?}"
        );
        seen += 1;
    }
    assert!(seen >= valid.len());
}
