//! Experiment orchestration: resolve a configuration into scheme, comb and
//! geometry objects, run the selected mode, and emit the artifacts plus a run
//! manifest into the output directory.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64 as C64;

use crate::atomic::LevelScheme;
use crate::budget::{self, BudgetOptions};
use crate::comb::CombConfig;
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::gate::{self, Axis, ChainGeometry, GatePlan};
use crate::lindblad::{self, PhononMode, SweepSettings};
use crate::magnus;
use crate::output;

/// Artifacts produced by one run.
#[derive(Debug)]
pub struct RunArtifacts {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

struct Resolved {
    scheme: LevelScheme,
    comb: CombConfig,
    geometry: ChainGeometry,
    qubit: (usize, usize),
    axis: Axis,
}

fn resolve(cfg: &ExperimentConfig) -> Result<Resolved> {
    cfg.validate()?;
    let scheme = cfg.load_scheme()?;
    let geometry = cfg.geometry(&scheme)?;
    let qubit = (
        scheme.sublevel(&cfg.gate.qubit_level_0)?,
        scheme.sublevel(&cfg.gate.qubit_level_1)?,
    );
    let mut comb = cfg.comb_config();
    // point the pulse-pair overlap at the target ion, symmetric delays
    let x_tg = geometry.positions[cfg.gate.target_ion];
    comb.delay_1 = -x_tg / crate::constants::C;
    comb.delay_2 = x_tg / crate::constants::C;
    // optional field calibration to a requested phase per pair
    if let Some(target) = cfg.gate.calibrated_phase_per_pair_rad {
        let (p0, p1) = magnus::phase_pair_at(&scheme, &comb, qubit.0, qubit.1, x_tg)?;
        let measured = 0.5 * (p1 - p0);
        if measured == 0.0 {
            return Err(Error::Physics(
                "cannot calibrate: differential phase vanishes at the target".into(),
            ));
        }
        comb = comb.scaled_field((target / measured.abs()).sqrt());
    }
    let axis = cfg.gate.axis.parse::<Axis>()?;
    Ok(Resolved {
        scheme,
        comb,
        geometry,
        qubit,
        axis,
    })
}

fn compile_plan(cfg: &ExperimentConfig, r: &Resolved) -> Result<GatePlan> {
    let x_tg = r.geometry.positions[cfg.gate.target_ion];
    let grid = vec![x_tg];
    let profile = magnus::phase_profile(&r.scheme, &r.comb, r.qubit.0, r.qubit.1, &grid)?;
    gate::compile_rotation(
        r.axis,
        cfg.gate.angle_rad,
        cfg.gate.target_ion,
        &profile,
        &r.geometry,
    )
}

/// Execute the configured mode, writing artifacts under `out_dir`.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunArtifacts> {
    let start = Instant::now();
    std::fs::create_dir_all(out_dir)?;
    let r = resolve(cfg)?;
    let mut files: Vec<PathBuf> = Vec::new();

    let summary = match cfg.run.mode.as_str() {
        "profile" => {
            let grid = magnus::default_grid(
                &r.comb,
                cfg.run.grid_points,
                cfg.run.grid_half_width_um * 1e-6,
            );
            let profile =
                magnus::phase_profile(&r.scheme, &r.comb, r.qubit.0, r.qubit.1, &grid)?;
            let path = out_dir.join("profile.csv");
            output::profile_csv(&path, &profile)?;
            files.push(path);
            format!(
                "phase profile over {} points; per-pair differential at target {:.6e} rad, \
                 far field {:.6e} rad, center/far ratio {:.6}",
                grid.len(),
                profile.differential_at_target(),
                profile.differential_far(),
                profile.target0 / profile.far0,
            )
        }
        "compile" => {
            let plan = compile_plan(cfg, &r)?;
            let path = out_dir.join("plan.txt");
            std::fs::write(&path, output::plan_document(&plan, &r.comb))?;
            files.push(path);
            let mut train_cfg = r.comb.clone();
            train_cfg.n_pulses = plan.n_pulses.max(1);
            let report = gate::chain_phase_report(
                &r.scheme,
                &train_cfg,
                &plan,
                &r.geometry,
                r.qubit.0,
                r.qubit.1,
            )?;
            let path = out_dir.join("chain_report.csv");
            output::chain_report_csv(&path, &report)?;
            files.push(path);
            format!(
                "compiled R_{}({:.6}) on ion {}: {} pulse pairs, {:.3} us, residual {:.3e} rad, \
                 crosstalk infidelity {:.3e}",
                plan.axis.label(),
                plan.angle,
                plan.target,
                plan.n_pulses,
                plan.duration(&r.comb) * 1e6,
                plan.residual_angle,
                report.crosstalk_infidelity
            )
        }
        "budget" => {
            let plan = compile_plan(cfg, &r)?;
            let opts = BudgetOptions {
                position_tolerance: cfg.gate.position_tolerance_nm * 1e-9,
                zeeman_splitting: cfg.scheme.zeeman_splitting_mhz * 1e6,
            };
            let b = budget::assemble_budget(&r.scheme, &r.comb, &r.geometry, &plan, r.qubit, &opts)?;
            let table = output::budget_table(&b);
            let path = out_dir.join("budget.txt");
            std::fs::write(&path, &table)?;
            files.push(path);
            let path = out_dir.join("budget.csv");
            output::budget_csv(&path, &b)?;
            files.push(path);
            format!("total infidelity {:.3e}\n{table}", b.total)
        }
        "simulate" | "sweep" => {
            let eta = cfg.lamb_dicke_value(&r.scheme);
            let settings = SweepSettings {
                qubit_levels: r.qubit,
                amplitudes: (
                    C64::new(cfg.run.initial_c0, 0.0),
                    C64::new(cfg.run.initial_c1, 0.0),
                ),
                mode: PhononMode {
                    eta,
                    omega: cfg.axial_frequency(),
                },
            };
            let opts = cfg.sim_options();
            let x_tg = r.geometry.positions[cfg.gate.target_ion];
            let positions: Vec<f64> = if cfg.run.mode == "simulate" {
                vec![x_tg]
            } else {
                let n = cfg.run.sweep_points.max(2);
                let hw = cfg.run.sweep_half_width_nm * 1e-9;
                (0..n)
                    .map(|i| x_tg - hw + 2.0 * hw * i as f64 / (n - 1) as f64)
                    .collect()
            };
            let rows = lindblad::sweep_positions(&r.scheme, &r.comb, &settings, &opts, &positions)?;
            let path = out_dir.join(if cfg.run.mode == "simulate" {
                "simulate.csv"
            } else {
                "sweep.csv"
            });
            output::sweep_csv(&path, &rows)?;
            files.push(path);
            let row = &rows[rows.len() / 2];
            format!(
                "{} trajectories of {} pulse pairs; midpoint x0 = {:.3e} m: phase {:.6e} rad \
                 (analytic {:.6e}, relative discrepancy {:.2e}), phonon excitation {:.3e} \
                 (analytic {:.3e})",
                rows.len(),
                r.comb.n_pulses,
                row.x0,
                row.phase,
                row.phase_analytic,
                (row.phase - row.phase_analytic).abs() / row.phase_analytic.abs().max(1e-300),
                row.phonon_prob,
                row.phonon_prob_analytic,
            )
        }
        other => return Err(Error::Config(format!("unknown mode '{other}'"))),
    };

    let manifest = out_dir.join("manifest.txt");
    let names: Vec<String> = files
        .iter()
        .map(|f| f.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    output::write_manifest(
        &manifest,
        cfg.hash(),
        &cfg.run.mode,
        start.elapsed().as_secs_f64(),
        &names,
    )?;
    files.push(manifest);
    Ok(RunArtifacts { files, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outdir(tag: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("ioncomb_harness_{tag}"));
        let _ = std::fs::remove_dir_all(&d);
        d
    }

    #[test]
    fn profile_mode_produces_csv_and_manifest() {
        let mut cfg = ExperimentConfig::default();
        cfg.run.grid_points = 21;
        cfg.run.grid_half_width_um = 0.5;
        let dir = outdir("profile");
        let art = run(&cfg, &dir).unwrap();
        assert!(art.files.iter().any(|f| f.ends_with("profile.csv")));
        assert!(art.files.iter().any(|f| f.ends_with("manifest.txt")));
        let text = std::fs::read_to_string(dir.join("profile.csv")).unwrap();
        assert!(text.starts_with("x_m,dtheta0_rad,dtheta1_rad,differential_rad"));
        assert_eq!(text.lines().count(), 22);
    }

    #[test]
    fn compile_mode_produces_plan() {
        let mut cfg = ExperimentConfig::default();
        cfg.run.mode = "compile".into();
        cfg.gate.calibrated_phase_per_pair_rad = Some(std::f64::consts::PI / 1600.0);
        let dir = outdir("compile");
        let art = run(&cfg, &dir).unwrap();
        let plan = std::fs::read_to_string(dir.join("plan.txt")).unwrap();
        assert!(plan.contains("n_pulses          800"), "{plan}");
        assert!(art.summary.contains("800 pulse pairs"));
    }

    #[test]
    fn identical_configs_give_byte_identical_csv() {
        let mut cfg = ExperimentConfig::default();
        cfg.run.grid_points = 11;
        cfg.run.grid_half_width_um = 0.3;
        let d1 = outdir("repr1");
        let d2 = outdir("repr2");
        run(&cfg, &d1).unwrap();
        run(&cfg, &d2).unwrap();
        let a = std::fs::read(d1.join("profile.csv")).unwrap();
        let b = std::fs::read(d2.join("profile.csv")).unwrap();
        assert_eq!(a, b);
    }
}
