//! Simulation and compilation toolkit for single-qubit addressing of trapped-ion
//! chains with two counter-propagating optical frequency combs.
//!
//! The pulse trains overlap on a target ion and imprint a position-dependent
//! AC-Stark phase on its electronic levels. The crate computes those phase
//! profiles from second-order Magnus theory, compiles local rotations into
//! pulse-train schedules plus global compensation rotations, evaluates the
//! gate-error budget channel by channel, and cross-checks the analytics with a
//! Lindblad master-equation simulation of the full level scheme coupled to one
//! vibrational mode.
//!
//! Internal unit conventions, used everywhere without exception:
//! * energies and rates are angular frequencies in rad/s (`ħ = 1`),
//! * dipole matrix elements are in units of `e·a₀`,
//! * electric fields are folded into `e·a₀·E/ħ` couplings in rad/s,
//! * lengths in meters, times in seconds.
//!
//! Fourier transforms follow the convention `F[E](ω) = ∫ E(t) e^{+iωt} dt`.

pub mod angular;
pub mod atomic;
pub mod budget;
pub mod comb;
pub mod config;
pub mod constants;
pub mod error;
pub mod exec;
pub mod gate;
pub mod harness;
pub mod lindblad;
pub mod linalg;
pub mod magnus;
pub mod ode;
pub mod output;
pub mod quadrature;

pub use error::{Error, ErrorCategory};
