//! End-to-end runs of the `vpland` binary on small configurations.

use landau_cli::artifacts::Table;
use std::path::Path;
use std::process::{Command, Output};

const SMALL_NONLINEAR: &str = "\
n_r = 41
r_max = 20
n_u = 12
n_l = 8
dt = 0.1
t_max = 3
markers_per_cell = 2
";

fn vpland(dir: &Path, config: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vpland"));
    if let Some(text) = config {
        let path = dir.join("run.cfg");
        std::fs::write(&path, text).unwrap();
        cmd.arg("-c").arg(path);
    }
    cmd.arg("-o")
        .arg(dir.join("out"))
        .args(args)
        .env("VPLAND_WORKERS", "1");
    cmd.output().unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn dispersion_rows_have_tiny_residuals() {
    let dir = tempfile::tempdir().unwrap();
    ok(&vpland(dir.path(), None, &["dispersion"]));
    let path = dir.path().join("out/dispersion.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# schema_version=1\n# config_sha256="));
    let t = Table::read(&path).unwrap();
    let k = t.column("k").unwrap();
    assert_eq!(k.len(), 256);
    for col in ["residual_plus", "residual_minus", "quad_mismatch"] {
        assert!(t.column(col).unwrap().iter().all(|&r| r < 1e-10), "{col}");
    }
    let (re, im) = (
        t.column("re_lambda_plus").unwrap(),
        t.column("im_lambda_plus").unwrap(),
    );
    for j in 0..k.len() {
        assert!((re[j].abs() - 1.0).abs() < 1e-14 && (im[j] - k[j]).abs() < 1e-14);
    }
}

#[test]
fn linear_then_rates_gives_a_decay_slope() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "k_n = 128\nt_max = 80\n";
    ok(&vpland(dir.path(), Some(cfg), &["linear"]));
    let out = dir.path().join("out");
    for f in ["linear_modes.csv", "linear_field.csv", "linear_meta.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    ok(&vpland(dir.path(), Some(cfg), &["rates"]));
    let rates = json(&out.join("rates.json"));
    assert_eq!(rates["schema_version"], 1);
    let slope = rates["sup_field_decay"]["slope"].as_f64().unwrap();
    assert!(slope < -1.5 && slope > -2.5, "{slope}");
    let freq = rates["probe_frequency"]["frequency"].as_f64().unwrap();
    assert!((freq - 1.0).abs() < 0.05, "{freq}");
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        vpland(dir.path(), None, &["frobnicate"]).status.code(),
        Some(2)
    );
}

#[test]
fn bad_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        vpland(dir.path(), Some("dt = 0.5\n"), &["dispersion"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        vpland(dir.path(), Some("nonsense = 1\n"), &["dispersion"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn missing_config_exits_five() {
    let out = Command::new(env!("CARGO_BIN_EXE_vpland"))
        .args(["-c", "/nonexistent/run.cfg", "dispersion"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        ok(&vpland(
            d.path(),
            Some(SMALL_NONLINEAR),
            &["nonlinear", "--mode", "direct"],
        ));
    }
    for f in ["rho_rt.csv", "field_rt.csv"] {
        let x = std::fs::read(a.path().join("out").join(f)).unwrap();
        let y = std::fs::read(b.path().join("out").join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
}

#[test]
fn small_direct_run_writes_its_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    ok(&vpland(
        dir.path(),
        Some(SMALL_NONLINEAR),
        &["nonlinear", "--mode", "direct"],
    ));
    let out = dir.path().join("out");
    let rho = Table::read(&out.join("rho_rt.csv")).unwrap();
    assert_eq!(rho.column("t").unwrap().len(), 31 * 41);
    let meta = json(&out.join("run_meta.json"));
    assert_eq!(meta["mode"], "direct");
    assert!(meta["conservation"]["mass_drift"].as_f64().unwrap() < 1e-10);
    ok(&vpland(
        dir.path(),
        Some(SMALL_NONLINEAR),
        &["rates", "--input", out.to_str().unwrap()],
    ));
    assert!(out.join("rates.json").exists());
}

#[test]
fn picard_without_enough_iterations_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL_NONLINEAR}picard_max_iter = 1\n");
    let out = vpland(dir.path(), Some(&cfg), &["nonlinear", "--mode", "picard"]);
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let log = json(&dir.path().join("out/picard_log.json"));
    assert_eq!(log["converged"], false);
}

#[test]
fn help_states_the_time_unit() {
    let out = Command::new(env!("CARGO_BIN_EXE_vpland"))
        .arg("--help")
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success());
    assert!(text.contains("plasma frequenc"));
    assert!(text.contains("VPLAND_WORKERS"));
}
