//! End-to-end tests of the command-line interface: artifacts, exit codes and
//! output reproducibility.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ioncomb"))
}

fn tmpdir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("ioncomb_cli_{tag}"));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn profile_runs_with_defaults_and_writes_artifacts() {
    let dir = tmpdir("profile");
    let out = bin()
        .args(["profile", "--out"])
        .arg(dir.join("run"))
        .args(["--override", "run.grid_points=15"])
        .args(["--override", "run.grid_half_width_um=0.4"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("run/profile.csv")).unwrap();
    assert!(csv.starts_with("x_m,dtheta0_rad,dtheta1_rad,differential_rad"));
    assert_eq!(csv.lines().count(), 16);
    let manifest = std::fs::read_to_string(dir.join("run/manifest.txt")).unwrap();
    assert!(manifest.contains("config_hash"));
    assert!(manifest.contains("mode            profile"));
}

#[test]
fn empty_config_equals_explicit_defaults_byte_for_byte() {
    let dir = tmpdir("defaults");
    std::fs::write(dir.join("empty.toml"), "").unwrap();
    // the reference parameter set, spelled out
    std::fs::write(
        dir.join("explicit.toml"),
        r#"
[comb]
carrier_wavelength_nm = 1000.0
pulse_duration_fs = 20.0
repetition_rate_mhz = 100.0
polarization = [0.0, 0.0, 1.0]
peak_field_rad_per_s = 4.405e12
n_pulses = 800

[trap]
axial_frequency_khz = 600.0
"#,
    )
    .unwrap();
    for (cfg, sub) in [("empty.toml", "a"), ("explicit.toml", "b")] {
        let out = bin()
            .args(["profile", "--config"])
            .arg(dir.join(cfg))
            .arg("--out")
            .arg(dir.join(sub))
            .args(["--override", "run.grid_points=11"])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(dir.join("a/profile.csv")).unwrap();
    let b = std::fs::read(dir.join("b/profile.csv")).unwrap();
    assert_eq!(a, b, "defaults and explicit reference config must agree byte-for-byte");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tmpdir("repro");
    for sub in ["r1", "r2"] {
        let out = bin()
            .args(["budget", "--out"])
            .arg(dir.join(sub))
            .args(["--override", "trap.n_ions=2"])
            .args(["--override", "trap.ion_positions_um=[0.0, 10.0]"])
            .args(["--override", "trap.lamb_dicke=0.09"])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(
        std::fs::read(dir.join("r1/budget.csv")).unwrap(),
        std::fs::read(dir.join("r2/budget.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_with_code_one() {
    let dir = tmpdir("cfgerr");
    // unknown key
    std::fs::write(dir.join("bad.toml"), "[comb]\nwavelength_nm = 1000\n").unwrap();
    let out = bin()
        .args(["profile", "--config"])
        .arg(dir.join("bad.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[config]"));
    // missing file
    let out = bin()
        .args(["profile", "--config"])
        .arg(dir.join("nope.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    // bad override
    let out = bin()
        .args(["profile", "--override", "comb.n_pulses=-4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numerics_errors_exit_with_code_two() {
    let dir = tmpdir("numerr");
    // a one-state Fock space cannot hold any excitation: the cutoff monitor
    // reports the leak as a numerics failure
    let out = bin()
        .args(["simulate", "--out"])
        .arg(dir.join("run"))
        .args(["--override", "run.fock_cutoff=0"])
        .args(["--override", "comb.n_pulses=1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[numerics]"));
}

#[test]
fn simulate_mode_reports_phase_agreement() {
    let dir = tmpdir("simulate");
    let out = bin()
        .args(["simulate", "--out"])
        .arg(dir.join("run"))
        .args(["--override", "comb.n_pulses=25"])
        .args(["--override", "run.fock_cutoff=3"])
        .args(["--override", "trap.lamb_dicke=0.09"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.join("run/simulate.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "x0_m,phase_rad,phase_analytic_rad,phonon_prob,phonon_prob_analytic,nonqubit_pop,trace_deficit"
    );
    let row: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    let (phase, analytic) = (row[1], row[2]);
    assert!(phase > 0.0);
    assert!((phase - analytic).abs() / analytic.abs() < 0.01);
}
