use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use epac_core::io::write_force_table;
use epac_core::pimd::ForceTable;

fn epac(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epac"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const HARMONIC: &str = r#"
[run]
seed = 11

[potential]
coefficients = [0.0, 0.0, 0.5]
mass = 1.0
symmetric = true

[system]
betas = [1.0]

[oracle]
q_min = -12.0
q_max = 12.0
n_points = 3001
dt = 0.05
t_max = 5.0

[pimd]
grid_points = 11
equilibration_steps = 500
production_steps = 2000

[effpot]
degree = 3

[legendre]
bootstrap_resamples = 8

[cmd]
ensemble_size = 256

[cmd.sampling]
equilibration_steps = 2000
stride = 50

[cmd.correlation]
t_max = 5.0
batches = 8

[epac]
t_max = 5.0
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn self_test_prints_one_line_per_check_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = epac(dir.path(), &["self-test"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    assert_eq!(
        out.lines().filter(|l| l.starts_with("PASS")).count(),
        5,
        "{out}"
    );
}

#[test]
fn missing_potential_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[potential]\nmass = 1.0\n\n[system]\nbetas = [1.0]\n",
    );
    let o = epac(dir.path(), &["solve-exact", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("coefficients"), "{}", stderr(&o));
    let o = epac(dir.path(), &["solve-exact"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn harmonic_self_test_flag_checks_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), HARMONIC);
    let o = epac(
        dir.path(),
        &["solve-exact", "--self-test", "--config", &cfg, "--out", "h"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS harmonic closed forms"));
    for f in [
        "eigensystem.json",
        "exact.csv",
        "exact.json",
        "canonical.csv",
        "exact_lines.csv",
        "canonical_lines.csv",
    ] {
        assert!(dir.path().join("h/beta_1").join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("h/manifest-solve-exact.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["outputs"]["beta_1/exact.csv"].is_string());

    let dw = write_config(
        dir.path(),
        &HARMONIC.replace("[0.0, 0.0, 0.5]", "[0.0, 0.0, -0.5, 0.0, 0.1]"),
    );
    let o = epac(
        dir.path(),
        &["solve-exact", "--self-test", "--config", &dw, "--out", "d"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn harmonic_pipeline_is_exact_deterministic_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), HARMONIC);
    let o = epac(dir.path(), &["run", "--config", &cfg, "--out", "a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let beta = dir.path().join("a/beta_1");
    for f in [
        "forces.csv",
        "classical.csv",
        "standard.csv",
        "frequency.json",
        "cmd.csv",
        "epac.csv",
        "epac_lines.csv",
        "spectrum_cmd_standard.csv",
        "peaks.json",
        "comparison.csv",
        "metrics.json",
    ] {
        assert!(beta.join(f).exists(), "{f}");
    }
    let freq: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(beta.join("frequency.json")).unwrap()).unwrap();
    assert!(
        (freq["omega"].as_f64().unwrap() - 1.0).abs() < 1e-3,
        "{freq}"
    );
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(beta.join("metrics.json")).unwrap()).unwrap();
    let epac_dev = metrics["epac"]["max_early_deviation"].as_f64().unwrap();
    assert!(epac_dev < 1e-3, "{metrics}");
    assert!(metrics["epac"]["first_crossing"].is_null());
    let cmd = &metrics["cmd"];
    assert!(
        cmd["initial_deviation"].as_f64().unwrap()
            < 4.0 * cmd["initial_stderr"].as_f64().unwrap() + 1e-3,
        "{metrics}"
    );

    // same seed in a fresh directory: identical bytes
    let o = epac(dir.path(), &["pimd-ecp", "--config", &cfg, "--out", "b"]);
    assert!(o.status.success());
    for f in ["forces.csv", "forces.json", "classical.csv"] {
        assert_eq!(
            fs::read(beta.join(f)).unwrap(),
            fs::read(dir.path().join("b/beta_1").join(f)).unwrap(),
            "{f}"
        );
    }
    assert_eq!(
        fs::read_to_string(dir.path().join("a/manifest-pimd-ecp.json")).unwrap(),
        fs::read_to_string(dir.path().join("b/manifest-pimd-ecp.json")).unwrap()
    );

    // rerun in place reuses the table; a different seed does not
    let o = epac(dir.path(), &["pimd-ecp", "--config", &cfg, "--out", "a"]);
    assert!(stderr(&o).contains("reusing force table"), "{}", stderr(&o));
    let o = epac(
        dir.path(),
        &["pimd-ecp", "--config", &cfg, "--out", "a", "--seed", "12"],
    );
    assert!(o.status.success());
    assert!(!stderr(&o).contains("reusing force table"));
}

#[test]
fn unconfined_force_table_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), HARMONIC);
    let q: Vec<f64> = (0..11).map(|i| -5.0 + i as f64).collect();
    let table = ForceTable {
        beta: 1.0,
        trotter: 32,
        seed: 0,
        force: q.clone(),
        stderr: vec![1e-3; q.len()],
        n_samples: vec![100; q.len()],
        q_c: q,
    };
    write_force_table(&dir.path().join("x/beta_1/forces.csv"), &table).unwrap();
    let o = epac(dir.path(), &["legendre", "--config", &cfg, "--out", "x"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn stages_fail_cleanly_without_their_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), HARMONIC);
    let o = epac(dir.path(), &["epac", "--config", &cfg, "--out", "empty"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("frequency.json"), "{}", stderr(&o));
}
