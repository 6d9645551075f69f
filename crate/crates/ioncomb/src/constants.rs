//! Physical constants, CODATA 2018.

/// Speed of light in vacuum (m/s, exact).
pub const C: f64 = 299_792_458.0;

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 8.854_187_812_8e-12;

/// Elementary charge (C, exact).
pub const E_CHARGE: f64 = 1.602_176_634e-19;

/// Bohr radius (m).
pub const A0: f64 = 5.291_772_109_03e-11;

/// Atomic mass constant (kg).
pub const U_AMU: f64 = 1.660_539_066_60e-27;

/// Dipole unit e·a₀ (C·m).
pub const EA0: f64 = E_CHARGE * A0;

/// Energy of 1 cm⁻¹ as an angular frequency (rad/s).
pub const CM_INV: f64 = 2.0 * std::f64::consts::PI * C * 100.0;

/// Spontaneous-emission conversion: |⟨u‖d‖l⟩|² = (2J_u+1)·DIPOLE_SUM_RULE·A/ω³,
/// with the reduced element in (e·a₀)², A in s⁻¹ and ω in rad/s.
pub const DIPOLE_SUM_RULE: f64 = 3.0 * std::f64::consts::PI * EPS0 * HBAR * C * C * C / (EA0 * EA0);
