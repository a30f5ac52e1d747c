use std::fs;
use std::path::Path;
use std::process::Command;

fn shergo(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_shergo"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn certify_exits_zero_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"certify\"\nlow_cutoff = 2\nrho = 15.0\n",
    );
    let out_dir = dir.path().join("out");
    let out = shergo(&[
        "certify",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["report"]["certificates"]["threshold_n"], 3);
    assert!(out_dir.join("manifest.json").exists());
}

#[test]
fn failed_check_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"simulate\"\nmax_wavenumber = 8\nlow_cutoff = 2\nrho = 1.0\nhorizon = 0.5\nensemble_size = 4\nalpha = 1000.0\ninitial_norm = 2.0\n",
    );
    let out_dir = dir.path().join("out");
    let out = shergo(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
        "--workers",
        "2",
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn bad_config_exits_one_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"certify\"\nlow_cutoff = 2\nbogus = 1\n",
    );
    let out = shergo(&["certify", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn experiment_mismatch_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"certify\"\nlow_cutoff = 2\n");
    let out = shergo(&["simulate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn seed_flag_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"simulate\"\nmax_wavenumber = 8\nlow_cutoff = 2\nrho = 1.0\nhorizon = 0.1\nensemble_size = 2\n",
    );
    let run = |seed: &str, sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = shergo(&[
            "simulate",
            "--config",
            &cfg,
            "--seed",
            seed,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_ne!(out.status.code(), Some(1));
        fs::read(out_dir.join("snapshots.csv")).unwrap()
    };
    assert_eq!(run("1", "a"), run("1", "b"));
    assert_ne!(run("1", "a"), run("2", "c"));
}
