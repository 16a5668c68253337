//! End-to-end tests of the `superrep` binary: exit codes, file outputs,
//! determinism and the config round trip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_superrep"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("superrep-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("missing {name}: {e}"))
}

#[test]
fn dyadic_gap_single_point() {
    let dir = tmp_dir("gap");
    let out = run(&["dyadic-gap", "--set", "n=1000", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let csv = read(&dir, "gap.csv");
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "claim_kind,k,c,N,phi,primal,dual_m1,dual_mphi,gap,binding_n,argmax_n"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "f");
    let primal: f64 = row[5].parse().unwrap();
    assert!((primal - 0.99).abs() < 1e-8, "primal {primal}");
    let dual: f64 = row[6].parse().unwrap();
    assert_eq!(dual, 0.0);

    // 17 significant digits, '.' decimal, lossless round trip
    assert!(row[5].contains('e'));
    assert_eq!(format!("{:.16e}", primal), row[5]);

    let manifest = read(&dir, "manifest.json");
    assert!(manifest.contains("\"all_passed\": true"));
    assert!(manifest.contains("\"defaulted\""));
    assert!(read(&dir, "timing.json").contains("wall_clock_secs"));
}

#[test]
fn dyadic_gap_sweep_rows_are_ordered() {
    let dir = tmp_dir("sweep");
    let out = run(&[
        "dyadic-gap",
        "--set",
        "n_grid=[10,100,1000]",
        "--set",
        "k_grid=[1,5,20]",
        "--set",
        "claim=kf",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir, "gap.csv");
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 9);
    // outer loop over N, inner over k; primal approaches k as N grows
    let last: Vec<&str> = rows[8].split(',').collect();
    let primal: f64 = last[5].parse().unwrap();
    let k: f64 = last[1].parse().unwrap();
    assert_eq!(k, 20.0);
    assert!((primal - (20.0 - 10.0 / 1000.0)).abs() < 1e-8);
}

#[test]
fn passage_law_records_reference_atom() {
    let dir = tmp_dir("passage");
    let out = run(&["passage-law", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let manifest = read(&dir, "manifest.json");
    assert!(manifest.contains("reference_atom_mass"));
    assert!(manifest.contains("\"expected\": 0.875"));
    let csv = read(&dir, "passage.csv");
    assert!(csv.lines().next().unwrap() == "a,estimate,se,classification");
    assert!(csv.contains("divergent"));
    assert!(csv.contains("finite"));
}

#[test]
fn mc_pair_manifests_are_byte_identical() {
    let d1 = tmp_dir("mc1");
    let d2 = tmp_dir("mc2");
    for d in [&d1, &d2] {
        let out = run(&[
            "mc-pair",
            "--set",
            "paths=4000",
            "--set",
            "seed=0",
            "--out",
            d.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(read(&d1, "manifest.json"), read(&d2, "manifest.json"));
    assert_eq!(read(&d1, "mc.csv"), read(&d2, "mc.csv"));
}

#[test]
fn config_round_trip_reproduces_outputs() {
    let d1 = tmp_dir("rt1");
    let out = run(&[
        "dyadic-gap",
        "--set",
        "n=64",
        "--set",
        "c=3.5",
        "--set",
        "claim=kf",
        "--set",
        "k=2.0",
        "--out",
        d1.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    // the manifest echoes the full config; feeding it back reproduces the run
    let manifest: serde_json::Value = serde_json::from_str(&read(&d1, "manifest.json")).unwrap();
    let config_echo = manifest.get("config").unwrap();
    let cfg_path = d1.join("echo.json");
    std::fs::write(&cfg_path, serde_json::to_string(config_echo).unwrap()).unwrap();

    let d2 = tmp_dir("rt2");
    let out = run(&[
        "dyadic-gap",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        d2.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(&d1, "gap.csv"), read(&d2, "gap.csv"));
    assert_eq!(read(&d1, "checks.csv"), read(&d2, "checks.csv"));
}

#[test]
fn flags_override_config_fields() {
    let dir = tmp_dir("override");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("cfg.json");
    std::fs::write(&cfg, r#"{"experiment": "dyadic-gap", "n": 100, "c": 10.0}"#).unwrap();
    let out = run(&[
        "dyadic-gap",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "n=200",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let manifest: serde_json::Value = serde_json::from_str(&read(&dir, "manifest.json")).unwrap();
    assert_eq!(manifest["config"]["n"], serde_json::json!(200));
    // n was set explicitly, so it must not be listed as defaulted
    let defaulted: Vec<String> =
        serde_json::from_value(manifest["defaulted"].clone()).unwrap();
    assert!(!defaulted.contains(&"n".to_string()));
    assert!(defaulted.contains(&"phi".to_string()));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    let dir = tmp_dir("usage");
    assert_eq!(
        run(&["dyadic-gap", "--set", "nonsense=1", "--out", dir.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["dyadic-gap", "--set", "malformed", "--out", dir.to_str().unwrap()]).status.code(),
        Some(2)
    );
    // config naming a different experiment than the positional
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("cfg.json");
    std::fs::write(&cfg, r#"{"experiment": "mc-pair"}"#).unwrap();
    assert_eq!(
        run(&["dyadic-gap", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn failed_runs_exit_one() {
    let dir = tmp_dir("fail");
    let out = run(&[
        "mc-pair",
        "--set",
        "horizon=20",
        "--set",
        "paths=1000",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("horizon too short"), "stderr: {stderr}");
}

#[test]
fn finite_duality_loads_market_json() {
    let dir = tmp_dir("market");
    std::fs::create_dir_all(&dir).unwrap();
    let market = dir.join("market.json");
    std::fs::write(&market, r#"{"p": [0.5, 0.5], "gains": [[1.0, -1.0]]}"#).unwrap();
    let out = run(&[
        "finite-duality",
        "--set",
        &format!("market_file={}", market.to_str().unwrap()),
        "--set",
        "claim_values=[1.0,0.0]",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir, "instances.csv");
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let dual: f64 = row[2].parse().unwrap();
    assert!((dual - 0.5).abs() < 1e-9, "dual {dual}");
    assert_eq!(row[4], "true");
}

#[test]
fn output_dir_from_environment() {
    let dir = tmp_dir("envout");
    let out = bin()
        .args(["entropy-check"])
        .env("SUPERREP_OUT", dir.to_str().unwrap())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.join("manifest.json").exists());
}
