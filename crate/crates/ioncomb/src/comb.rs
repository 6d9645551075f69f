//! Two counter-propagating pulse trains: time-domain field and the analytic
//! Fourier images used by the Magnus integrals.
//!
//! The field of one pulse pair (pair index k, ion coordinate x) is
//!
//! ```text
//! E_k(t, x) = 2 E_env(t - kT - t1 - x/c) cos(w_c (t - kT - t1 - x/c))
//!           + 2 E_env(t - kT - t2 + x/c) cos(w_c (t - kT - t2 + x/c))
//! ```
//!
//! i.e. the complex envelope-carrier product of each comb plus its conjugate.
//! The carrier phase is referenced to each pulse's own envelope peak
//! (carrier-envelope phase fixed to 0 for both combs), which makes the train
//! exactly T-periodic. Field strengths are expressed throughout as
//! e·a₀·E/ħ in rad/s. Fourier convention: F[E](ω) = ∫ E(t) e^{+iωt} dt.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::constants::C;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CombConfig {
    /// Carrier wavelength (m).
    pub carrier_wavelength: f64,
    /// Gaussian pulse duration τ (s): E_env(t) = E_peak·exp(-t²/τ²).
    pub pulse_duration: f64,
    /// Repetition rate ν_rep (Hz); T = 1/ν_rep.
    pub rep_rate: f64,
    /// Comb delays t₁, t₂ (s); the pulse pair overlaps at x = c(t₂-t₁)/2.
    pub delay_1: f64,
    pub delay_2: f64,
    /// Common polarization unit vector.
    pub polarization: [f64; 3],
    /// Peak field as e·a₀·E_peak/ħ (rad/s).
    pub peak_field: f64,
    /// Number of pulse pairs in a train.
    pub n_pulses: u32,
}

impl CombConfig {
    /// Table-style defaults: 1000 nm, 20 fs, 100 MHz, z-polarized,
    /// e·a₀·E_peak/ħ = 4.405e12 rad/s, 800 pairs, zero delays.
    pub fn default_params() -> CombConfig {
        CombConfig {
            carrier_wavelength: 1000e-9,
            pulse_duration: 20e-15,
            rep_rate: 100e6,
            delay_1: 0.0,
            delay_2: 0.0,
            polarization: [0.0, 0.0, 1.0],
            peak_field: 4.405e12,
            n_pulses: 800,
        }
    }

    pub fn carrier_frequency(&self) -> f64 {
        2.0 * PI * C / self.carrier_wavelength
    }

    pub fn period(&self) -> f64 {
        1.0 / self.rep_rate
    }

    /// Arrival time of the comb-1 / comb-2 pulse at coordinate x, within a
    /// pair window (k = 0).
    pub fn arrival_1(&self, x: f64) -> f64 {
        self.delay_1 + x / C
    }

    pub fn arrival_2(&self, x: f64) -> f64 {
        self.delay_2 - x / C
    }

    /// Overlap center x_tg = c (t₂ - t₁) / 2.
    pub fn overlap_center(&self) -> f64 {
        0.5 * C * (self.delay_2 - self.delay_1)
    }

    pub fn validate(&self) -> Result<()> {
        let unorm: f64 = self.polarization.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (unorm - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "polarization vector has norm {unorm:.6}, must be 1"
            )));
        }
        if !(self.carrier_wavelength > 0.0 && self.pulse_duration > 0.0 && self.rep_rate > 0.0) {
            return Err(Error::Config("comb parameters must be positive".into()));
        }
        if self.pulse_duration >= 1e-3 * self.period() {
            return Err(Error::Config(format!(
                "pulse duration {:.3e} s too long for period {:.3e} s; pairs must be separable (tau < 1e-3 T)",
                self.pulse_duration,
                self.period()
            )));
        }
        if self.n_pulses == 0 {
            return Err(Error::Config("n_pulses must be at least 1".into()));
        }
        Ok(())
    }

    /// Copy with the peak field rescaled by `factor`.
    pub fn scaled_field(&self, factor: f64) -> CombConfig {
        let mut c = self.clone();
        c.peak_field *= factor;
        c
    }
}

/// Gaussian envelope E_peak·exp(-t²/τ²).
pub fn envelope(cfg: &CombConfig, t: f64) -> f64 {
    cfg.peak_field * (-t * t / (cfg.pulse_duration * cfg.pulse_duration)).exp()
}

/// Analytic Fourier image of the envelope: E_peak·τ·√π·exp(-ω²τ²/4).
pub fn envelope_fourier(cfg: &CombConfig, omega: f64) -> f64 {
    let tau = cfg.pulse_duration;
    cfg.peak_field * tau * PI.sqrt() * (-omega * omega * tau * tau / 4.0).exp()
}

/// Real scalar amplitude of the k-th pulse pair at time t and coordinate x;
/// the field vector is this amplitude times the polarization vector.
pub fn pair_field_amplitude(cfg: &CombConfig, t: f64, x: f64, k: u32) -> f64 {
    let wc = cfg.carrier_frequency();
    let tloc = t - k as f64 * cfg.period();
    let s1 = tloc - cfg.arrival_1(x);
    let s2 = tloc - cfg.arrival_2(x);
    2.0 * envelope(cfg, s1) * (wc * s1).cos() + 2.0 * envelope(cfg, s2) * (wc * s2).cos()
}

/// Field vector of the k-th pulse pair.
pub fn pair_field_time(cfg: &CombConfig, t: f64, x: f64, k: u32) -> [f64; 3] {
    let a = pair_field_amplitude(cfg, t, x, k);
    [
        a * cfg.polarization[0],
        a * cfg.polarization[1],
        a * cfg.polarization[2],
    ]
}

/// ∂/∂x of the pair amplitude at fixed t (envelope and carrier both move).
pub fn pair_field_gradient(cfg: &CombConfig, t: f64, x: f64, k: u32) -> f64 {
    let wc = cfg.carrier_frequency();
    let tau2 = cfg.pulse_duration * cfg.pulse_duration;
    let tloc = t - k as f64 * cfg.period();
    let s1 = tloc - cfg.arrival_1(x);
    let s2 = tloc - cfg.arrival_2(x);
    // d s1/dx = -1/c, d s2/dx = +1/c
    let d1 = 2.0 * envelope(cfg, s1) * ((-2.0 * s1 / tau2) * (wc * s1).cos() - wc * (wc * s1).sin());
    let d2 = 2.0 * envelope(cfg, s2) * ((-2.0 * s2 / tau2) * (wc * s2).cos() - wc * (wc * s2).sin());
    (-d1 + d2) / C
}

/// Fourier image of one full pulse pair at coordinate x (k = 0 window):
/// both carrier-shifted Gaussians with the delay phases e^{iω(t₁+x/c)} and
/// e^{iω(t₂-x/c)}.
pub fn pair_field_fourier(cfg: &CombConfig, omega: f64, x: f64) -> C64 {
    let wc = cfg.carrier_frequency();
    let spectral = envelope_fourier(cfg, omega - wc) + envelope_fourier(cfg, omega + wc);
    let p1 = C64::from_polar(1.0, omega * cfg.arrival_1(x));
    let p2 = C64::from_polar(1.0, omega * cfg.arrival_2(x));
    (p1 + p2) * spectral
}

/// |envelope spectrum|² at ω measured from the carrier — the single-pulse
/// spectral weight entering the phase-shift integrals.
pub fn envelope_power(cfg: &CombConfig, omega: f64) -> f64 {
    let e = envelope_fourier(cfg, omega - cfg.carrier_frequency());
    e * e
}

/// Interference factor 1 + cos(ω(t₁ - t₂ + 2x/c)).
pub fn interference_factor(cfg: &CombConfig, omega: f64, x: f64) -> f64 {
    1.0 + (omega * (cfg.delay_1 - cfg.delay_2 + 2.0 * x / C)).cos()
}
