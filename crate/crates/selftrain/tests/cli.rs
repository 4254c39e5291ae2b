//! End-to-end checks of the `selftrain` binary: exit codes, the
//! pretrain / train-teacher / pseudo-label / train-student chain, the
//! experiment runner's outputs, and seed determinism of grid files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use selftrain::synthetic::SyntheticTask;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_selftrain"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

struct Setup {
    _dir: tempfile::TempDir,
    config: PathBuf,
    out: PathBuf,
}

fn setup() -> Setup {
    let dir = tempfile::tempdir().unwrap();
    let task = SyntheticTask::default();
    task.write_labeled_jsonl(&dir.path().join("train.jsonl"), 60, 11, "train:")
        .unwrap();
    task.write_labeled_jsonl(&dir.path().join("dev.jsonl"), 30, 12, "dev:")
        .unwrap();
    task.write_labeled_jsonl(&dir.path().join("test.jsonl"), 50, 13, "test:")
        .unwrap();
    task.write_pool_jsonl(&dir.path().join("pool.jsonl"), 400, 14, "pool:")
        .unwrap();
    let out = dir.path().join("out");
    let config = dir.path().join("config.json");
    let json = serde_json::json!({
        "train_path": dir.path().join("train.jsonl"),
        "dev_path": dir.path().join("dev.jsonl"),
        "test_path": dir.path().join("test.jsonl"),
        "pool_path": dir.path().join("pool.jsonl"),
        "labels": ["neg", "pos"],
        "d_sizes": [20],
        "k_values": [10],
        "u_sizes": [300],
        "strategies": ["t_d", "t_d_dprime"],
        "seeds": [0, 1],
        "model": {"embedding_dim": 16, "hidden_dim": 16, "max_len": 8},
        "pretrain": {"enabled": false, "epochs": 1},
        "train": {"max_epochs": 15, "early_stop_patience": 4},
        "output_dir": out,
    });
    std::fs::write(&config, serde_json::to_string_pretty(&json).unwrap()).unwrap();
    Setup {
        _dir: dir,
        config,
        out,
    }
}

fn config_arg(s: &Setup) -> String {
    s.config.display().to_string()
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let output = run(&["frobnicate"]);
    assert_eq!(code(&output), 1);
}

#[test]
fn missing_config_is_usage_error() {
    let output = run(&["experiment"]);
    assert_eq!(code(&output), 1);
    assert!(String::from_utf8_lossy(&output.stderr).contains("--config"));
}

#[test]
fn unreadable_config_is_runtime_error() {
    let output = run(&["experiment", "--config", "/nonexistent/config.json"]);
    assert_eq!(code(&output), 2);
}

#[test]
fn invalid_split_is_usage_error() {
    let s = setup();
    let output = run(&[
        "evaluate",
        "--config",
        &config_arg(&s),
        "--model",
        "irrelevant.bin",
        "--split",
        "validation",
    ]);
    assert_eq!(code(&output), 1);
    assert!(String::from_utf8_lossy(&output.stderr).contains("--split"));
}

#[test]
fn experiment_writes_grid_tables_and_manifest() {
    let s = setup();
    let output = run(&["experiment", "--config", &config_arg(&s), "--seed", "5"]);
    assert_eq!(
        code(&output),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    for file in ["grid.jsonl", "table.txt", "table.csv", "manifest.json"] {
        assert!(s.out.join(file).exists(), "{file} missing");
    }
    let grid = std::fs::read_to_string(s.out.join("grid.jsonl")).unwrap();
    assert_eq!(grid.lines().count(), 4); // 2 strategies x 2 seeds
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(s.out.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["base_seed"], 5);
    assert!(manifest["corpus_hashes"]["train"].is_string());

    // re-rendering from the finished grid succeeds and prints the table
    let output = run(&["render", "--config", &config_arg(&s)]);
    assert_eq!(code(&output), 0);
    assert!(String::from_utf8_lossy(&output.stdout).contains("T(D)"));
}

#[test]
fn same_seed_gives_identical_grid_files() {
    let s = setup();
    let out_a = s.out.with_file_name("out_a");
    let out_b = s.out.with_file_name("out_b");
    for out in [&out_a, &out_b] {
        let output = run(&[
            "experiment",
            "--config",
            &config_arg(&s),
            "--seed",
            "9",
            "--out",
            &out.display().to_string(),
        ]);
        assert_eq!(code(&output), 0);
    }
    assert_eq!(
        std::fs::read(out_a.join("grid.jsonl")).unwrap(),
        std::fs::read(out_b.join("grid.jsonl")).unwrap()
    );

    // a different seed changes the grid
    let out_c = s.out.with_file_name("out_c");
    let output = run(&[
        "experiment",
        "--config",
        &config_arg(&s),
        "--seed",
        "10",
        "--out",
        &out_c.display().to_string(),
    ]);
    assert_eq!(code(&output), 0);
    assert_ne!(
        std::fs::read(out_a.join("grid.jsonl")).unwrap(),
        std::fs::read(out_c.join("grid.jsonl")).unwrap()
    );
}

#[test]
fn manual_pipeline_chain_works() {
    let s = setup();
    let cfg = config_arg(&s);
    let out = s.out.display().to_string();

    let output = run(&["pretrain", "--config", &cfg, "--out", &out]);
    assert_eq!(
        code(&output),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let init = s.out.join("pretrained.bin");
    assert!(init.exists());
    assert!(s.out.join("pretrain_report.json").exists());

    let output = run(&[
        "train-teacher",
        "--config",
        &cfg,
        "--out",
        &out,
        "--init",
        &init.display().to_string(),
    ]);
    assert_eq!(
        code(&output),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let teacher = s.out.join("teacher.bin");
    assert!(teacher.exists());

    let output = run(&[
        "pseudo-label",
        "--config",
        &cfg,
        "--out",
        &out,
        "--teacher",
        &teacher.display().to_string(),
        "--k",
        "15",
    ]);
    assert_eq!(
        code(&output),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let d_prime = s.out.join("d_prime.jsonl");
    assert!(d_prime.exists());
    assert!(s.out.join("d_prime.provenance.json").exists());
    let rows = std::fs::read_to_string(&d_prime).unwrap();
    assert_eq!(rows.lines().count(), 30); // K=15 per class, two classes

    let output = run(&[
        "train-student",
        "--config",
        &cfg,
        "--out",
        &out,
        "--teacher",
        &teacher.display().to_string(),
        "--d-prime",
        &d_prime.display().to_string(),
        "--strategy",
        "t_d_dprime_f_d",
    ]);
    assert_eq!(
        code(&output),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let student = s.out.join("student.bin");
    assert!(student.exists());

    let output = run(&[
        "evaluate",
        "--config",
        &cfg,
        "--model",
        &student.display().to_string(),
        "--split",
        "test",
    ]);
    assert_eq!(code(&output), 0);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("test accuracy:"), "stdout: {stdout}");
}

fn assert_no_such_file(path: &Path) {
    assert!(!path.exists());
}

#[test]
fn failed_runs_do_not_leave_checkpoints() {
    let s = setup();
    // d_sizes larger than the training file must fail with a config error
    let mut json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&s.config).unwrap()).unwrap();
    json["d_sizes"] = serde_json::json!([5000]);
    std::fs::write(&s.config, serde_json::to_string_pretty(&json).unwrap()).unwrap();
    let output = run(&["experiment", "--config", &config_arg(&s)]);
    assert_eq!(code(&output), 2);
    assert!(String::from_utf8_lossy(&output.stderr).contains("d_sizes"));
    assert_no_such_file(&s.out.join("grid.jsonl"));
}
