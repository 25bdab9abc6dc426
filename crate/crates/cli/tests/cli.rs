use std::path::Path;
use std::process::{Command, Output};

fn cosmocore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cosmocore"))
        .args(args)
        .output()
        .unwrap()
}

fn text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr)
}

fn desk_config(dir: &Path) -> String {
    let path = dir.join("cfg.json");
    let cfg = cosmocore::config::ExperimentConfig {
        seeds: vec![1, 2],
        ..cosmocore::config::ExperimentConfig::desk()
    };
    std::fs::write(&path, cfg.to_json()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn validate_corpus_succeeds_on_builtin_and_shipped() {
    let out = cosmocore(&["validate-corpus"]);
    assert!(out.status.success(), "{}", text(&out));
    assert!(text(&out).contains("24 tasks, 0 failing"));
    let fixtures = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/corpus");
    assert!(cosmocore(&["validate-corpus", "--corpus", fixtures])
        .status
        .success());
}

#[test]
fn run_writes_outputs_and_report_rebuilds_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = desk_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = cosmocore(&[
        "run",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
        "--no-pruning",
    ]);
    assert!(out.status.success(), "{}", text(&out));
    for f in [
        "episodes.jsonl",
        "consolidation.jsonl",
        "metrics.json",
        "summary.csv",
    ] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(summary.starts_with(
        "arm,seed,hallucination_rate,mean_reward,mean_entropy,cycles_to_zero_error,recurrence_rate,final_occupancy\n"
    ));
    assert_eq!(summary.lines().count(), 3);
    assert!(summary
        .lines()
        .skip(1)
        .all(|l| l.starts_with("no_pruning,")));

    std::fs::remove_file(out_dir.join("summary.csv")).unwrap();
    let rep = cosmocore(&["report", "--out", out_dir.to_str().unwrap()]);
    assert!(rep.status.success(), "{}", text(&rep));
    assert_eq!(
        std::fs::read_to_string(out_dir.join("summary.csv")).unwrap(),
        summary
    );
}

#[test]
fn seeds_flag_overrides_config_and_ablate_runs_four_arms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = desk_config(dir.path());
    let out_dir = dir.path().join("ab");
    let out = cosmocore(&[
        "ablate",
        "--config",
        &cfg,
        "--seeds",
        "3,4,5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out));
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 4 * 3);
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("metrics.json")).unwrap())
            .unwrap();
    assert_eq!(metrics["deltas"].as_array().unwrap().len(), 3);
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"lambda_weight": 0.6}"#).unwrap();
    let out_dir = dir.path().join("o");
    let out = cosmocore(&[
        "run",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(!out.status.success());

    let out = cosmocore(&["run", "--tagger", "mlp", "--out", out_dir.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(text(&out).contains("--tagger-checkpoint"));

    let mut cfg = cosmocore::config::ExperimentConfig::desk();
    cfg.dream_mix_fraction = 1.5;
    std::fs::write(&bad, cfg.to_json()).unwrap();
    let out = cosmocore(&[
        "run",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(text(&out).contains("dream_mix_fraction"), "{}", text(&out));
}

#[test]
fn trained_tagger_checkpoint_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("tagger.json");
    let out = cosmocore(&[
        "train-tagger",
        "--out",
        ck.to_str().unwrap(),
        "--epochs",
        "2",
    ]);
    assert!(out.status.success(), "{}", text(&out));
    let cfg = desk_config(dir.path());
    let out_dir = dir.path().join("m");
    let out = cosmocore(&[
        "run",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
        "--tagger",
        "mlp",
        "--tagger-checkpoint",
        ck.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out));
}

#[test]
fn write_corpus_matches_shipped_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let out = cosmocore(&["write-corpus", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/corpus");
    for entry in std::fs::read_dir(&shipped).unwrap() {
        let p = entry.unwrap().path();
        let name = p.file_name().unwrap();
        assert_eq!(
            std::fs::read(&p).unwrap(),
            std::fs::read(dir.path().join(name)).unwrap()
        );
    }
}
