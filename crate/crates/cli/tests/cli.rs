use std::path::Path;
use std::process::Command;

use ldgf_cli::{describe, execute, ExperimentConfig, Summary};
use serde_json::json;

fn ldgf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ldgf"))
}

fn write_config(dir: &Path, body: serde_json::Value) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body.to_string()).unwrap();
    path
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn unknown_experiment_exits_2_without_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        json!({"experiment": "no-such-thing", "output_dir": out}),
    );
    let status = ldgf().args(["run", "--config"]).arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for body in [
        json!({"experiment": "sanov-ladder", "parameters": {"bogus": 1}, "output_dir": out}),
        json!({"experiment": "sanov-ladder", "parameters": {"n_values": "many"}, "output_dir": out}),
        json!({"experiment": "sanov-ladder", "parameters": {"n_values": [41, 80, 160]}, "output_dir": out}),
        json!({"experiment": "sanov-ladder", "colour": "blue"}),
    ] {
        let cfg = write_config(dir.path(), body.clone());
        let status = ldgf().args(["run", "--config"]).arg(&cfg).status().unwrap();
        assert_eq!(status.code(), Some(2), "{body}");
    }
    assert!(!out.exists());
    let missing = ldgf()
        .args(["run", "--config"])
        .arg(dir.path().join("absent.json"))
        .status()
        .unwrap();
    assert_eq!(missing.code(), Some(2));
}

#[test]
fn w2_crosscheck_default_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        json!({"experiment": "w2-crosscheck", "output_dir": dir.path().join("out")}),
    );
    let status = ldgf().args(["run", "--config"]).arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("out/w2-crosscheck/summary.json")).unwrap();
    let summary: Summary = serde_json::from_str(&text).unwrap();
    assert!(summary.pass);
    assert!(summary.metrics["max_method_disagreement"] <= 1e-9);
    assert_eq!(summary.check("methods_agree").unwrap().threshold, 1e-9);
    assert!(dir.path().join("out/w2-crosscheck/pairs.csv").exists());
}

#[test]
fn failed_criterion_exits_1_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        json!({"experiment": "sanov-ladder", "parameters": {"slope_tol": 1e-6}, "output_dir": out}),
    );
    let status = ldgf().args(["run", "--config"]).arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(1));
    let summary: Summary =
        serde_json::from_slice(&std::fs::read(out.join("sanov-ladder/summary.json")).unwrap())
            .unwrap();
    assert!(!summary.pass);
}

#[test]
fn same_config_and_seed_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    for experiment in ["w2-crosscheck", "discrete-time-mobility", "sanov-ladder"] {
        let mut runs = Vec::new();
        for k in 0..2 {
            let out = dir.path().join(format!("{experiment}-{k}"));
            let cfg = write_config(
                dir.path(),
                json!({"experiment": experiment, "seed": 11, "output_dir": out, "format": "json"}),
            );
            ldgf().args(["run", "--config"]).arg(&cfg).status().unwrap();
            runs.push(read_dir_sorted(&out.join(experiment)));
        }
        assert!(!runs[0].is_empty());
        assert_eq!(runs[0], runs[1], "{experiment}");
    }
}

#[test]
fn seed_and_output_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        json!({"experiment": "discrete-time-mobility", "seed": 1, "output_dir": dir.path().join("a")}),
    );
    let other = dir.path().join("b");
    let status = ldgf()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--seed", "9", "--out"])
        .arg(&other)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(!dir.path().join("a").exists());
    let summary: Summary = serde_json::from_slice(
        &std::fs::read(other.join("discrete-time-mobility/summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary.seed, 9);
    let a = execute(&ExperimentConfig::named("discrete-time-mobility"))
        .unwrap()
        .0;
    assert_ne!(
        a.metrics["unlabelled_cost"],
        summary.metrics["unlabelled_cost"]
    );
}

#[test]
fn experiments_write_only_their_own_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for experiment in ["sanov-ladder", "heatbath-ladder"] {
        let cfg = write_config(
            dir.path(),
            json!({"experiment": experiment, "output_dir": out}),
        );
        ldgf().args(["run", "--config"]).arg(&cfg).status().unwrap();
    }
    let mut dirs: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    dirs.sort();
    assert_eq!(dirs, ["heatbath-ladder", "sanov-ladder"]);
    let files: Vec<String> = read_dir_sorted(&out.join("heatbath-ladder"))
        .into_iter()
        .map(|(n, _)| n)
        .collect();
    assert_eq!(files, ["ladder.csv", "large_bath.csv", "summary.json"]);
}

#[test]
fn describe_matches_golden_text() {
    let golden = include_str!("golden/describe.txt");
    assert_eq!(describe(None).unwrap(), golden);
    let out = ldgf().arg("describe").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden);
}

#[test]
fn describe_single_and_unknown() {
    let text = describe(Some("jko-vs-heat")).unwrap();
    assert!(text.starts_with("jko-vs-heat\n"));
    assert!(text.contains("minimizing movement") && text.contains("diffusion equation"));
    assert!(text.contains("reference_dt"));
    let all = describe(None).unwrap();
    for e in ldgf_cli::experiments::EXPERIMENTS {
        assert!(all.contains(&format!("{}\n", e.name)), "{}", e.name);
    }
    let out = ldgf().args(["describe", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
