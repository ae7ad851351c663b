//! End-to-end runs of the binary: exit codes, file artifacts, and the
//! reference-comparison path.

use std::path::Path;
use std::process::{Command, Output};

fn curveflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curveflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const STATIONARY: &str = r#"
[grid]
n = 64
m = 3

[target]
constant = 10.0
harmonics = [[2, 10.0, 10.0]]

[initial]
constant = 10.0
harmonics = [[2, 10.0, 10.0]]

[solver]
dt = 0.001
t_end = 0.01
snapshot_times = [0.0, 0.01]
"#;

const RELAXING: &str = r#"
[grid]
n = 64
m = 3

[target]
constant = 10.0
harmonics = [[2, 10.0, 10.0]]

[initial]
constant = 11.672
harmonics = [[4, 9.0, 9.0]]
match_target_energy = true

[solver]
dt = 0.001
t_end = 0.02
snapshot_times = [0.0, 0.01]
"#;

fn rho_column(path: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn simulate_on_a_stationary_pair_keeps_every_snapshot_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.toml", STATIONARY);
    let out = dir.path().join("out");
    let result = curveflow(&[
        "simulate",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        result.status.success(),
        "{}",
        String::from_utf8_lossy(&result.stderr)
    );

    let first = rho_column(&out.join("snapshot_t0.0000.csv"));
    let last = rho_column(&out.join("snapshot_t0.0100.csv"));
    let sup = first
        .iter()
        .zip(&last)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(sup <= 1e-10, "stationary snapshots differ by {sup:e}");
    assert!(out.join("metrics.csv").is_file());
    assert!(out.join("frame_t0.0100.svg").is_file());
}

#[test]
fn zero_step_size_is_rejected_before_any_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let broken = STATIONARY.replace("dt = 0.001", "dt = 0.0");
    let config = write_config(dir.path(), "run.toml", &broken);
    let out = dir.path().join("out");
    let result = curveflow(&[
        "simulate",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&result.stderr).contains("step size"));
    assert!(
        !out.exists(),
        "no artifacts may appear for an invalid configuration"
    );
}

#[test]
fn under_resolved_grid_override_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.toml", RELAXING);
    // The initial curve carries harmonic index 4; n = 16 cannot resolve it.
    let result = curveflow(&["simulate", "--config", &config, "--n", "16"]);
    assert_eq!(result.status.code(), Some(1));
}

#[test]
fn table_accepts_its_own_output_and_flags_a_perturbed_cell() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.toml", RELAXING);
    let out = dir.path().join("out");
    let result = curveflow(&["table", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(
        result.status.success(),
        "{}",
        String::from_utf8_lossy(&result.stderr)
    );

    // Re-run against the just-written table as reference: everything matches.
    let table = std::fs::read_to_string(out.join("table.csv")).unwrap();
    std::fs::write(dir.path().join("ref.csv"), &table).unwrap();
    let checked = format!("{RELAXING}\n[table]\nreference = \"ref.csv\"\n");
    let config2 = write_config(dir.path(), "checked.toml", &checked);
    let ok = curveflow(&["table", "--config", &config2]);
    assert!(
        ok.status.success(),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );

    // Perturb one reference cell by 1%: past the 0.5% default tolerance.
    let mut lines: Vec<String> = table.lines().map(String::from).collect();
    let fields: Vec<String> = lines[2].split(',').map(String::from).collect();
    let bumped: f64 = fields[2].parse::<f64>().unwrap() * 1.01;
    lines[2] = format!(
        "{},{},{bumped},{},{}",
        fields[0], fields[1], fields[3], fields[4]
    );
    std::fs::write(dir.path().join("ref.csv"), lines.join("\n")).unwrap();
    let rejected = curveflow(&["table", "--config", &config2]);
    assert_eq!(rejected.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&rejected.stderr).contains("deviates"));

    // A looser explicit tolerance lets the same table through.
    let tolerated = curveflow(&["table", "--config", &config2, "--tolerance", "0.05"]);
    assert!(tolerated.status.success());
}

#[test]
fn verify_passes_a_healthy_run_and_catches_a_broken_conservation_law() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.toml", RELAXING);
    let healthy = curveflow(&["verify", "--config", &config]);
    assert!(
        healthy.status.success(),
        "{}",
        String::from_utf8_lossy(&healthy.stderr)
    );
    assert!(String::from_utf8_lossy(&healthy.stdout).contains("all bounds hold"));

    let sabotaged = RELAXING.replace("t_end = 0.02", "t_end = 1.0\nnegate_nonlocal_term = true");
    let config2 = write_config(dir.path(), "sabotaged.toml", &sabotaged);
    let broken = curveflow(&["verify", "--config", &config2]);
    assert_eq!(broken.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&broken.stderr).contains("energy drift"));
}

#[test]
fn homotopy_reports_the_circle_cover() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.toml", RELAXING);
    let result = curveflow(&["homotopy", "--config", &config]);
    assert!(
        result.status.success(),
        "{}",
        String::from_utf8_lossy(&result.stderr)
    );
    assert!(String::from_utf8_lossy(&result.stdout).contains("circle cover of radius"));
}

#[test]
fn analyze_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.toml", RELAXING);
    let out = dir.path().join("out");
    let result = curveflow(&[
        "analyze",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        result.status.success(),
        "{}",
        String::from_utf8_lossy(&result.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["limit_constant"].is_number());
    assert!(report["energy_drift"].as_f64().unwrap() < 1e-6);
}
