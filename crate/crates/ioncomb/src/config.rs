//! Experiment configuration: TOML sections mirroring the domain types, with
//! defaults reproducing the reference parameter set (1000 nm, 20 fs, 100 MHz,
//! z-polarized, e·a₀·E_peak/ħ = 4.405e12 rad/s, 600 kHz axial trap). Every
//! key carries its unit in its name.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, TAU};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::atomic::{self, LevelScheme};
use crate::comb::CombConfig;
use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::gate::{self, Axis, ChainGeometry};
use crate::lindblad::SimOptions;

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub scheme: SchemeSection,
    pub comb: CombSection,
    pub trap: TrapSection,
    pub gate: GateSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeSection {
    /// Level-scheme file; the bundled 40Ca+ data when omitted.
    pub path: Option<PathBuf>,
    /// Linear Zeeman splitting applied as mJ · 2π · ν_z.
    pub zeeman_splitting_mhz: f64,
}

impl Default for SchemeSection {
    fn default() -> Self {
        SchemeSection {
            path: None,
            zeeman_splitting_mhz: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CombSection {
    pub carrier_wavelength_nm: f64,
    pub pulse_duration_fs: f64,
    pub repetition_rate_mhz: f64,
    pub delay_1_fs: f64,
    pub delay_2_fs: f64,
    pub polarization: [f64; 3],
    /// Peak field as e·a₀·E_peak/ħ (rad/s).
    pub peak_field_rad_per_s: f64,
    pub n_pulses: u32,
}

impl Default for CombSection {
    fn default() -> Self {
        CombSection {
            carrier_wavelength_nm: 1000.0,
            pulse_duration_fs: 20.0,
            repetition_rate_mhz: 100.0,
            delay_1_fs: 0.0,
            delay_2_fs: 0.0,
            polarization: [0.0, 0.0, 1.0],
            peak_field_rad_per_s: 4.405e12,
            n_pulses: 800,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrapSection {
    pub axial_frequency_khz: f64,
    /// Explicit Lamb-Dicke parameter; computed from the ion mass, the axial
    /// frequency and the carrier wavelength when omitted.
    pub lamb_dicke: Option<f64>,
    pub n_ions: usize,
    /// Explicit equilibrium positions; the harmonic-trap Coulomb equilibrium
    /// is solved when omitted and n_ions > 1.
    pub ion_positions_um: Option<Vec<f64>>,
}

impl Default for TrapSection {
    fn default() -> Self {
        TrapSection {
            axial_frequency_khz: 600.0,
            lamb_dicke: None,
            n_ions: 1,
            ion_positions_um: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateSection {
    pub axis: String,
    pub angle_rad: f64,
    pub target_ion: usize,
    pub qubit_level_0: String,
    pub qubit_level_1: String,
    /// When set, the peak field is rescaled so |δθ| per pair at the target
    /// equals this value before compiling.
    pub calibrated_phase_per_pair_rad: Option<f64>,
    /// Overlap-alignment tolerance assumed by the error budget.
    pub position_tolerance_nm: f64,
}

impl Default for GateSection {
    fn default() -> Self {
        GateSection {
            axis: "z".into(),
            angle_rad: FRAC_PI_2,
            target_ion: 0,
            qubit_level_0: "D5/2:-1/2".into(),
            qubit_level_1: "S1/2:-1/2".into(),
            calibrated_phase_per_pair_rad: None,
            position_tolerance_nm: 30.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// profile | compile | budget | simulate | sweep
    pub mode: String,
    pub out_dir: PathBuf,
    pub grid_points: usize,
    pub grid_half_width_um: f64,
    pub sweep_points: usize,
    pub sweep_half_width_nm: f64,
    pub fock_cutoff: usize,
    pub ode_rtol: f64,
    /// Initial qubit amplitudes (c₀, c₁) for simulate/sweep.
    pub initial_c0: f64,
    pub initial_c1: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            mode: "profile".into(),
            out_dir: PathBuf::from("out"),
            grid_points: 2001,
            grid_half_width_um: 3.0,
            sweep_points: 9,
            sweep_half_width_nm: 100.0,
            fock_cutoff: 5,
            ode_rtol: 1e-10,
            initial_c0: FRAC_1_SQRT_2,
            initial_c1: FRAC_1_SQRT_2,
        }
    }
}

pub const MODES: [&str; 5] = ["profile", "compile", "budget", "simulate", "sweep"];

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !MODES.contains(&self.run.mode.as_str()) {
            return Err(Error::Config(format!(
                "unknown run mode '{}' (expected one of {:?})",
                self.run.mode, MODES
            )));
        }
        self.comb_config().validate()?;
        if self.trap.axial_frequency_khz <= 0.0 {
            return Err(Error::Config("axial frequency must be positive".into()));
        }
        if let Some(p) = &self.scheme.path {
            if !p.exists() {
                return Err(Error::Config(format!(
                    "scheme file '{}' does not exist",
                    p.display()
                )));
            }
        }
        if let Some(pos) = &self.trap.ion_positions_um {
            if pos.len() != self.trap.n_ions {
                return Err(Error::Config(format!(
                    "{} ion positions given for {} ions",
                    pos.len(),
                    self.trap.n_ions
                )));
            }
        }
        if self.gate.target_ion >= self.trap.n_ions {
            return Err(Error::Config(format!(
                "target ion {} outside the {}-ion chain",
                self.gate.target_ion, self.trap.n_ions
            )));
        }
        self.gate.axis.parse::<Axis>()?;
        if self.gate.angle_rad < 0.0 {
            return Err(Error::Config("gate angle must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn comb_config(&self) -> CombConfig {
        CombConfig {
            carrier_wavelength: self.comb.carrier_wavelength_nm * 1e-9,
            pulse_duration: self.comb.pulse_duration_fs * 1e-15,
            rep_rate: self.comb.repetition_rate_mhz * 1e6,
            delay_1: self.comb.delay_1_fs * 1e-15,
            delay_2: self.comb.delay_2_fs * 1e-15,
            polarization: self.comb.polarization,
            peak_field: self.comb.peak_field_rad_per_s,
            n_pulses: self.comb.n_pulses,
        }
    }

    /// Load (or build in) the level scheme and apply the Zeeman shift.
    pub fn load_scheme(&self) -> Result<LevelScheme> {
        let raw = match &self.scheme.path {
            Some(p) => atomic::load_level_scheme(p)?,
            None => LevelScheme::ca40(),
        };
        Ok(raw.with_zeeman_shift(self.scheme.zeeman_splitting_mhz * 1e6))
    }

    pub fn axial_frequency(&self) -> f64 {
        TAU * self.trap.axial_frequency_khz * 1e3
    }

    /// Chain geometry from the explicit positions or the Coulomb equilibrium.
    pub fn geometry(&self, scheme: &LevelScheme) -> Result<ChainGeometry> {
        let omega = self.axial_frequency();
        let positions = match &self.trap.ion_positions_um {
            Some(p) => p.iter().map(|v| v * 1e-6).collect(),
            None => gate::equilibrium_positions(self.trap.n_ions, omega, scheme.mass)?,
        };
        let eta = self.lamb_dicke_value(scheme);
        let geom = ChainGeometry {
            eta: vec![vec![eta]; positions.len()],
            positions,
            mode_freqs: vec![omega],
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn lamb_dicke_value(&self, scheme: &LevelScheme) -> f64 {
        self.trap.lamb_dicke.unwrap_or_else(|| {
            lamb_dicke(
                self.axial_frequency(),
                scheme.mass,
                self.comb.carrier_wavelength_nm * 1e-9,
            )
        })
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            n_max: self.run.fock_cutoff,
            rtol: self.run.ode_rtol,
            ..Default::default()
        }
    }

    /// Canonical serialized form, the hashing and round-trip basis.
    pub fn canonical(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn hash(&self) -> u64 {
        fnv1a(self.canonical().as_bytes())
    }
}

/// Lamb-Dicke parameter η = k_c √(ħ/(2 m ω)).
pub fn lamb_dicke(omega_ax: f64, mass: f64, carrier_wavelength: f64) -> f64 {
    let kc = TAU / carrier_wavelength;
    kc * (HBAR / (2.0 * mass * omega_ax)).sqrt()
}

/// FNV-1a, 64 bit.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

/// Parse a config document, rejecting unknown keys.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig =
        toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Load a config file, or the all-defaults config when `path` is None.
pub fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read '{}': {e}", p.display())))?;
            parse_config(&text)
        }
        None => {
            let cfg = ExperimentConfig::default();
            cfg.validate()?;
            Ok(cfg)
        }
    }
}

/// Apply `section.key=value` overrides on the TOML representation, then
/// re-deserialize so unknown keys and type errors are caught.
pub fn apply_overrides(cfg: &ExperimentConfig, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut table: toml::Table = toml::from_str(&cfg.canonical())
        .map_err(|e| Error::Config(format!("internal round-trip: {e}")))?;
    for ov in overrides {
        let (path, raw) = ov
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{ov}' is not key=value")))?;
        // parse as a TOML literal; fall back to a bare string for convenience
        let value: toml::Value = match format!("v = {raw}").parse::<toml::Table>() {
            Ok(t) => t.get("v").cloned().unwrap(),
            Err(_) => toml::Value::String(raw.to_string()),
        };
        let keys: Vec<&str> = path.split('.').collect();
        let mut node = &mut table;
        for k in &keys[..keys.len() - 1] {
            node = node
                .entry(k.to_string())
                .or_insert_with(|| toml::Value::Table(Default::default()))
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("override path '{path}' crosses a value")))?;
        }
        node.insert(keys[keys.len() - 1].to_string(), value);
    }
    let merged: ExperimentConfig = table
        .try_into()
        .map_err(|e| Error::Config(format!("override: {e}")))?;
    merged.validate()?;
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::C;
    use approx::assert_relative_eq;

    #[test]
    fn defaults_are_table_parameters() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let c = cfg.comb_config();
        assert_relative_eq!(c.carrier_wavelength, 1000e-9, max_relative = 1e-15);
        assert_relative_eq!(c.pulse_duration, 20e-15, max_relative = 1e-15);
        assert_relative_eq!(c.rep_rate, 100e6, max_relative = 1e-15);
        assert_eq!(c.polarization, [0.0, 0.0, 1.0]);
        assert_eq!(c.peak_field, 4.405e12);
        assert_eq!(c.n_pulses, 800);
        assert_eq!(cfg.trap.axial_frequency_khz, 600.0);
    }

    #[test]
    fn lamb_dicke_reference_value_and_scaling() {
        let s = LevelScheme::ca40();
        let w = TAU * 600e3;
        let eta = lamb_dicke(w, s.mass, 1000e-9);
        assert_relative_eq!(eta, 0.091, max_relative = 3e-3);
        assert_relative_eq!(lamb_dicke(4.0 * w, s.mass, 1000e-9), eta / 2.0, max_relative = 1e-12);
        assert_relative_eq!(lamb_dicke(w, 4.0 * s.mass, 1000e-9), eta / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn round_trip_is_semantically_idempotent() {
        let text = r#"
[comb]
n_pulses = 200
peak_field_rad_per_s = 4.0e12

[run]
mode = "sweep"
sweep_points = 5
"#;
        let a = parse_config(text).unwrap();
        let b = parse_config(&a.canonical()).unwrap();
        assert_eq!(a.canonical(), b.canonical());
        assert_eq!(b.comb.n_pulses, 200);
        assert_eq!(b.run.sweep_points, 5);
        // untouched sections keep their defaults
        assert_eq!(b.comb.carrier_wavelength_nm, 1000.0);
    }

    #[test]
    fn rejects_unknown_keys_and_modes() {
        assert!(parse_config("[comb]\npulse_len_fs = 20\n").is_err());
        assert!(parse_config("[run]\nmode = \"dance\"\n").is_err());
    }

    #[test]
    fn overrides_apply_with_type_checks() {
        let cfg = ExperimentConfig::default();
        let o = apply_overrides(
            &cfg,
            &[
                "comb.n_pulses=200".into(),
                "run.mode=\"budget\"".into(),
                "trap.lamb_dicke=0.09".into(),
            ],
        )
        .unwrap();
        assert_eq!(o.comb.n_pulses, 200);
        assert_eq!(o.run.mode, "budget");
        assert_eq!(o.trap.lamb_dicke, Some(0.09));
        assert!(apply_overrides(&cfg, &["comb.bogus=1".into()]).is_err());
        assert!(apply_overrides(&cfg, &["comb.n_pulses".into()]).is_err());
    }

    #[test]
    fn geometry_from_equilibrium_positions() {
        let mut cfg = ExperimentConfig::default();
        cfg.trap.n_ions = 3;
        cfg.gate.target_ion = 1;
        let s = cfg.load_scheme().unwrap();
        let g = cfg.geometry(&s).unwrap();
        assert_eq!(g.positions.len(), 3);
        assert!(g.positions[1].abs() < 1e-12);
        assert!(g.positions[2] > 1e-6); // microns apart
        // explicit positions win
        cfg.trap.ion_positions_um = Some(vec![-10.0, 0.0, 10.0]);
        let g = cfg.geometry(&s).unwrap();
        assert_relative_eq!(g.positions[2], 10e-6, max_relative = 1e-12);
    }

    #[test]
    fn hash_distinguishes_configs() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.comb.n_pulses = 801;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), ExperimentConfig::default().hash());
    }

    #[test]
    fn speed_of_light_consistency() {
        // carrier frequency from wavelength through the comb config
        let cfg = ExperimentConfig::default();
        let wc = cfg.comb_config().carrier_frequency();
        assert_relative_eq!(wc, TAU * C / 1000e-9, max_relative = 1e-15);
    }
}
