use std::fs;
use std::path::Path;

use shergo_core::harness::{run_experiment, verify_manifest, RunConfig};
use shergo_core::Error;

fn config(dir: &Path, body: &str) -> RunConfig {
    let src = format!("{body}\noutput_dir = {:?}\n", dir.display().to_string());
    RunConfig::from_toml_str(&src).unwrap()
}

fn certificates(dir: &Path, rho: f64) -> serde_json::Value {
    let cfg = config(
        dir,
        &format!("experiment = \"certify\"\nmax_wavenumber = 8\nlow_cutoff = 2\nrho = {rho:?}"),
    );
    let out = run_experiment(&cfg, None).unwrap();
    assert_eq!(out.pass, Some(true));
    let text = fs::read_to_string(dir.join("certificates.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn certify_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let r = certificates(dir.path(), 0.0);
    assert_eq!(r["certificates"]["threshold_n"], 2);
    let r = certificates(dir.path(), 15.0);
    assert_eq!(r["certificates"]["threshold_n"], 3);
    assert!(r["certificates"]["C1"].as_f64().unwrap() > 0.0);
    assert!(r["certificates"]["threshold_n_tilde"].as_u64().unwrap() >= 3);
}

#[test]
fn inconsistent_kernel_bounds_rejected() {
    let src = "experiment = \"certify\"\nlow_cutoff = 2\nnonlinearity = \"nonlocal\"\nkernel_lower = 2.0\nkernel_upper = 1.0\n";
    assert!(matches!(
        RunConfig::from_toml_str(src),
        Err(Error::Parse { line: 5, .. })
    ));
}

const SIMULATE: &str = "experiment = \"simulate\"\nmax_wavenumber = 8\nlow_cutoff = 2\nrho = 1.0\nensemble_size = 12\nhorizon = 0.5\ndt = 0.001\nsnapshot_times = [0.1, 0.5]\nenergy_stride = 10\nseed = 4\n";

#[test]
fn simulate_is_reproducible_across_workers() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_experiment(&config(a.path(), SIMULATE), Some(1)).unwrap();
    let rb = run_experiment(&config(b.path(), SIMULATE), Some(3)).unwrap();
    assert_eq!(ra.manifest.config_hash, rb.manifest.config_hash);
    assert_eq!(ra.manifest.stream_ids, (0..12).collect::<Vec<_>>());
    for f in ["trajectory.csv", "snapshots.csv", "energy.csv"] {
        let x = fs::read(a.path().join(f)).unwrap();
        let y = fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    let snaps = fs::read_to_string(a.path().join("snapshots.csv")).unwrap();
    assert_eq!(snaps.lines().count(), 1 + 2 * 12);
    assert!(snaps.starts_with("time,stream,norm_sq,l4_pow4,c0,"));
}

#[test]
fn manifest_lists_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&config(dir.path(), SIMULATE), None).unwrap();
    let mut listed: Vec<_> = out.manifest.files.iter().map(|f| f.path.clone()).collect();
    listed.sort();
    let mut present: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    present.sort();
    assert_eq!(listed, present);
    assert!(verify_manifest(dir.path()).unwrap().is_empty());
}

#[test]
fn ergodicity_same_start_gives_zero_distance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "experiment = \"ergodicity\"\nmax_wavenumber = 8\nlow_cutoff = 2\nrho = 1.0\nensemble_size = 8\nhorizon = 0.2\nsnapshot_times = [0.05, 0.1, 0.2]\ninitial_norm = 1.0\ninitial_norm_2 = 1.0\n",
    );
    let out = run_experiment(&cfg, None).unwrap();
    assert_eq!(out.pass, Some(true));
    assert_eq!(out.report["report"]["all_zero"], true);
}

#[test]
fn ergodicity_needs_second_start() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "experiment = \"ergodicity\"\nmax_wavenumber = 8\nlow_cutoff = 2\nhorizon = 0.1\n",
    );
    assert!(matches!(run_experiment(&cfg, None), Err(Error::Config(_))));
}

#[test]
fn couple_identical_pair() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "experiment = \"couple\"\nmax_wavenumber = 8\nlow_cutoff = 2\nrho = 1.0\nensemble_size = 4\nwindow_length = 0.05\nwindow_count = 3\n",
    );
    let out = run_experiment(&cfg, Some(2)).unwrap();
    assert_eq!(out.pass, Some(true));
    let text = fs::read_to_string(dir.path().join("pairs.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 4 * 3);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["label"]["set"], "coupled");
        assert_eq!(v["label"]["m"], 0);
        assert_eq!(v["drift_energy"], 0.0);
    }
    let freq = fs::read_to_string(dir.path().join("frequencies.csv")).unwrap();
    assert_eq!(freq.lines().count(), 1 + 3);
}

#[test]
fn couple_unforced_low_mode_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "experiment = \"couple\"\nmax_wavenumber = 8\nlow_cutoff = 2\nforced_cutoff = 1\nensemble_size = 2\nwindow_length = 0.05\nwindow_count = 2\ninitial_norm = 0.5\n",
    );
    assert!(matches!(
        run_experiment(&cfg, None),
        Err(Error::UncontrollableMode { .. })
    ));
}

#[test]
fn slave_contracts_above_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "experiment = \"slave\"\nmax_wavenumber = 16\nlow_cutoff = 3\nrho = 1.0\nhorizon = 0.1\nseed = 9\n",
    );
    let out = run_experiment(&cfg, None).unwrap();
    assert_eq!(out.pass, Some(true));
    let fit = &out.report["report"]["fit"];
    assert!(fit["rate"].as_f64().unwrap() > 0.0);
}

#[test]
fn slave_below_threshold_only_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "experiment = \"slave\"\nmax_wavenumber = 16\nlow_cutoff = 2\nrho = 15.0\nhorizon = 0.05\n",
    );
    let out = run_experiment(&cfg, None).unwrap();
    assert_eq!(out.pass, None);
    assert_eq!(out.report["report"]["above_threshold"], false);
}

#[test]
fn kernels_raised_cosine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "experiment = \"kernels\"\nmax_wavenumber = 8\nlow_cutoff = 2\nkernel_lower = 0.5\nkernel_upper = 1.5\ntrials = 50\n",
    );
    let out = run_experiment(&cfg, None).unwrap();
    assert_eq!(out.pass, Some(true));
    let table = fs::read_to_string(dir.path().join("mollifier.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 8);
    assert!(dir.path().join("kernel.csv").exists());
}

#[test]
fn mollifier_pair_is_validated_before_use() {
    let dir = tempfile::tempdir().unwrap();
    let base = "experiment = \"simulate\"\nmax_wavenumber = 8\nlow_cutoff = 2\nrho = 1.0\nhorizon = 0.01\nnonlinearity = \"nonlocal\"\nkernel = \"mollifier\"\nkernel_normalization = \"unit_mass\"\n";
    let bad = config(
        dir.path(),
        &format!("{base}kernel_delta = 1.5\nepsilon = 0.001\n"),
    );
    assert!(matches!(run_experiment(&bad, None), Err(Error::Config(_))));
    let good = config(
        dir.path(),
        &format!("{base}kernel_delta = 0.05\nepsilon = 0.1\n"),
    );
    assert!(run_experiment(&good, None).is_ok());
}
