use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str], config: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_subradiance"));
    cmd.args(args).arg("--out").arg(dir.join("out"));
    if let Some(text) = config {
        let path = dir.join("run.toml");
        fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited normally")
}

const SMALL_SPECTROSCOPY: &str = r#"
[experiment]
phi_grid = { start = 0.0, stop = 6.283185307179586, points = 25 }
omega_d_grid_ghz = { start = 6.55, stop = 6.67, points = 61 }
"#;

const SHORT_DELAYS: &str = r#"
[experiment]
delay_grid_ns = { start = 0.0, stop = 1500.0, points = 61 }
delta_grid_mhz = [-400.0, -300.0]
"#;

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let out = run(dir, &["spectroscopy"], Some(SMALL_SPECTROSCOPY));
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["spectroscopy.csv", "spectroscopy.json", "spectroscopy.meta.json"] {
        let x = fs::read(a.path().join("out").join(file)).unwrap();
        let y = fs::read(b.path().join("out").join(file)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{file} differs between runs");
    }
}

#[test]
fn spectroscopy_csv_has_expected_columns_and_calibration() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["spectroscopy", "--format", "csv"], Some(SMALL_SPECTROSCOPY));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/spectroscopy.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("phi_rad,omega_d_ghz,population"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 25 * 61);
    assert!(rows.iter().all(|r| r.len() == 3 && (0.0..=0.5).contains(&r[2])));
    assert!(!dir.path().join("out/spectroscopy.json").exists());

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/spectroscopy.meta.json")).unwrap()).unwrap();
    let diff = meta["phase_calibration"]["difference_rad"].as_f64().unwrap();
    assert!((diff - std::f64::consts::PI).abs() < 0.05, "{diff}");
    assert_eq!(meta["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(meta["config"]["device"]["kappa_mhz"], 3.01);
}

#[test]
fn unknown_config_key_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["dressed"], Some("[device]\nkappa = 3.0\n"));
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("kappa"), "{err}");
}

#[test]
fn missing_config_file_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_subradiance"))
        .args(["dressed", "--config"])
        .arg(dir.path().join("absent.toml"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn mismatched_experiment_type_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["dressed"], Some("[experiment]\ntype = \"sweep\"\n"));
    assert_eq!(code(&out), 2);
}

#[test]
fn resonant_dressed_report_exits_with_precondition_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["dressed"], Some("[device]\nomega_r_ghz = 6.647\nomega_q_ghz = 6.647\n"));
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unequal_qubits_exit_with_precondition_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["spectroscopy"], Some("[device]\nomega_q_ghz = [6.647, 6.650]\n"));
    assert_eq!(code(&out), 3);
}

#[test]
fn dressed_report_matches_reference_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["dressed"], None);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/dressed.json")).unwrap()).unwrap();
    assert_eq!(report["purcell_rate_per_ns"]["psi_a"], 0.0);
    assert!((report["two_j_abs"]["mhz"].as_f64().unwrap() - 92.8).abs() < 1e-9);
    assert!((report["omega_a"]["ghz"].as_f64().unwrap() - 6.647).abs() < 1e-12);
    assert_eq!(report["dark_state"], "psi_a");
    assert!(dir.path().join("out/dressed.meta.json").exists());
}

#[test]
fn sweep_reports_four_states_per_detuning() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["sweep", "--format", "csv,json"], Some(SHORT_DELAYS));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "delta_mhz,target,t1_ns,t1_error_ns,converged,integrator_step_ns");
    assert_eq!(lines.len(), 1 + 8);
    let psi_a: Vec<&str> = lines.iter().filter(|l| l.contains(",psi_a,")).copied().collect();
    assert_eq!(psi_a.len(), 2);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/sweep.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 8);
}

#[test]
fn lifetime_of_dark_state_without_loss_is_infinite() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("[device]\nt1_intrinsic_us = inf\nt_phi_ns = inf\n{SHORT_DELAYS}");
    let out = run(dir.path(), &["lifetime", "--n-max", "2"], Some(&cfg));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/lifetime.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["fit"]["t1"], "inf");
    assert_eq!(meta["n_max"], 2);
    assert_eq!(meta["config"]["device"]["t_phi_ns"], "inf");
    let csv = fs::read_to_string(dir.path().join("out/lifetime.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("delay_ns,population"));
    assert_eq!(csv.lines().count(), 62);
}

#[test]
fn invalid_override_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["dressed", "--n-max", "1"], None);
    assert_eq!(code(&out), 2);
}
