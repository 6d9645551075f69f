//! CSV and report emission. Numeric CSV cells use 17 significant digits so
//! identical configurations produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::budget::ErrorBudget;
use crate::comb::CombConfig;
use crate::error::Result;
use crate::gate::{ChainPhaseReport, GatePlan};
use crate::lindblad::SweepRow;
use crate::magnus::PhaseProfile;

/// Full-round-trip float formatting.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn profile_csv(path: &Path, profile: &PhaseProfile) -> Result<()> {
    let rows: Vec<Vec<f64>> = (0..profile.x.len())
        .map(|i| {
            vec![
                profile.x[i],
                profile.dtheta0[i],
                profile.dtheta1[i],
                profile.differential(i),
            ]
        })
        .collect();
    write_csv(
        path,
        &["x_m", "dtheta0_rad", "dtheta1_rad", "differential_rad"],
        &rows,
    )
}

pub fn sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let data: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            vec![
                r.x0,
                r.phase,
                r.phase_analytic,
                r.phonon_prob,
                r.phonon_prob_analytic,
                r.nonqubit_pop,
                r.trace_deficit,
            ]
        })
        .collect();
    write_csv(
        path,
        &[
            "x0_m",
            "phase_rad",
            "phase_analytic_rad",
            "phonon_prob",
            "phonon_prob_analytic",
            "nonqubit_pop",
            "trace_deficit",
        ],
        &data,
    )
}

pub fn budget_csv(path: &Path, budget: &ErrorBudget) -> Result<()> {
    let mut out = String::new();
    out.push_str("channel,infidelity\n");
    for (name, value) in budget.rows() {
        let _ = writeln!(out, "{name},{}", fmt_f64(value));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Aligned human-readable budget table.
pub fn budget_table(budget: &ErrorBudget) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<26} {:>12}", "error source", "contribution");
    let _ = writeln!(out, "{}", "-".repeat(39));
    for (name, value) in budget.rows() {
        let _ = writeln!(out, "{name:<26} {value:>12.3e}");
    }
    if !budget.notes.is_empty() {
        let _ = writeln!(out, "\nnotes:");
        for n in &budget.notes {
            let _ = writeln!(out, "  - {n}");
        }
    }
    out
}

/// Structured text document for a compiled plan.
pub fn plan_document(plan: &GatePlan, cfg: &CombConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "target_ion        {}", plan.target);
    let _ = writeln!(out, "axis              {}", plan.axis.label());
    let _ = writeln!(out, "angle_rad         {}", fmt_f64(plan.angle));
    let _ = writeln!(out, "delay_diff_fs     {}", fmt_f64(plan.delay_diff * 1e15));
    let _ = writeln!(out, "n_pulses          {}", plan.n_pulses);
    let _ = writeln!(out, "duration_us       {}", fmt_f64(plan.duration(cfg) * 1e6));
    let _ = writeln!(out, "residual_rad      {}", fmt_f64(plan.residual_angle));
    let _ = writeln!(
        out,
        "phase_per_pair    {}",
        fmt_f64(plan.delta_theta_target)
    );
    for r in &plan.pre {
        let _ = writeln!(out, "pre_rotation      {} {}", r.axis.label(), fmt_f64(r.angle));
    }
    let _ = writeln!(out, "train             {} pulse pairs", plan.n_pulses);
    for r in &plan.post {
        let _ = writeln!(out, "post_rotation     {} {}", r.axis.label(), fmt_f64(r.angle));
    }
    out
}

pub fn chain_report_csv(path: &Path, report: &ChainPhaseReport) -> Result<()> {
    let rows: Vec<Vec<f64>> = report
        .ions
        .iter()
        .map(|i| vec![i.position, i.train_phase, i.residual, i.infidelity])
        .collect();
    write_csv(
        path,
        &["x_m", "train_phase_rad", "residual_rad", "infidelity"],
        &rows,
    )
}

/// Run manifest: config hash, code version, wall time, artifacts.
pub fn write_manifest(
    path: &Path,
    config_hash: u64,
    mode: &str,
    wall_seconds: f64,
    files: &[String],
) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "tool            ioncomb {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "mode            {mode}");
    let _ = writeln!(out, "config_hash     {config_hash:016x}");
    let _ = writeln!(out, "wall_seconds    {wall_seconds:.3}");
    for f in files {
        let _ = writeln!(out, "artifact        {f}");
    }
    fs::write(path, out)?;
    Ok(())
}
