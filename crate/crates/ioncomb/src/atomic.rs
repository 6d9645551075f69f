//! Ion electronic structure: Zeeman-resolved levels, dipole couplings derived
//! from decay rates, and the line-oriented level-scheme file format.

use std::collections::HashMap;
use std::f64::consts::{SQRT_2, TAU};
use std::fmt;
use std::path::Path;

use num_complex::Complex64 as C64;

use crate::angular::dipole_projection;
use crate::constants::{CM_INV, DIPOLE_SUM_RULE};
use crate::error::{Error, Result};
use crate::linalg::CMat;

/// One Zeeman-resolved electronic level. Energies are angular frequencies in
/// rad/s relative to the ground level.
#[derive(Debug, Clone)]
pub struct Level {
    pub label: String,
    pub energy: f64,
    pub two_j: i32,
    pub two_mj: i32,
    /// Total radiative width in rad/s; 0 for ground and metastable levels.
    pub linewidth: f64,
}

impl Level {
    pub fn name(&self) -> String {
        format!("{}:{}", self.label, fmt_half(self.two_mj))
    }
}

fn fmt_half(two_x: i32) -> String {
    if two_x % 2 == 0 {
        format!("{}", two_x / 2)
    } else {
        format!("{}/2", two_x)
    }
}

/// Electric-dipole coupling between an upper and a lower sublevel, stored as
/// Cartesian components of ⟨upper|d̂|lower⟩ in units of e·a₀.
#[derive(Debug, Clone)]
pub struct DipoleCoupling {
    pub upper: usize,
    pub lower: usize,
    pub component: [C64; 3],
}

/// Parity class inferred from the leading term-symbol letter; electric-dipole
/// couplings connect S↔P and P↔D only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Orbital {
    S,
    P,
    D,
}

fn orbital_of(label: &str) -> Result<Orbital> {
    match label.chars().next() {
        Some('S') => Ok(Orbital::S),
        Some('P') => Ok(Orbital::P),
        Some('D') => Ok(Orbital::D),
        _ => Err(Error::Scheme(format!(
            "level label '{label}' must start with S, P or D"
        ))),
    }
}

fn dipole_allowed(a: Orbital, b: Orbital) -> bool {
    matches!(
        (a, b),
        (Orbital::S, Orbital::P) | (Orbital::P, Orbital::S) | (Orbital::P, Orbital::D) | (Orbital::D, Orbital::P)
    )
}

#[derive(Debug, Clone)]
pub struct LevelScheme {
    pub species: String,
    pub mass: f64,
    pub levels: Vec<Level>,
    pub couplings: Vec<DipoleCoupling>,
}

impl LevelScheme {
    /// The bundled 40Ca+ scheme.
    pub fn ca40() -> LevelScheme {
        parse_level_scheme(include_str!("../data/ca40.levels"))
            .expect("bundled ca40.levels must parse")
    }

    /// Assemble a scheme from explicit sublevels and Cartesian dipole
    /// components, running the same validation as the file loader. Useful for
    /// custom species and for small analytic test systems.
    pub fn from_parts(
        species: &str,
        mass: f64,
        levels: Vec<Level>,
        couplings: Vec<DipoleCoupling>,
    ) -> Result<LevelScheme> {
        for c in &couplings {
            if c.upper >= levels.len() || c.lower >= levels.len() {
                return Err(Error::Scheme(format!(
                    "coupling ({}, {}) references missing levels",
                    c.upper, c.lower
                )));
            }
        }
        let s = LevelScheme {
            species: species.to_string(),
            mass,
            levels,
            couplings,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    /// Index of the sublevel named `LABEL:mj`, e.g. `D5/2:-1/2`.
    pub fn sublevel(&self, name: &str) -> Result<usize> {
        let (label, mj) = name
            .rsplit_once(':')
            .ok_or_else(|| Error::Config(format!("sublevel name '{name}' is not LABEL:mj")))?;
        let two_mj = parse_half(mj)
            .ok_or_else(|| Error::Config(format!("bad mj '{mj}' in sublevel name '{name}'")))?;
        self.levels
            .iter()
            .position(|l| l.label == label && l.two_mj == two_mj)
            .ok_or_else(|| Error::Config(format!("sublevel '{name}' not present in scheme")))
    }

    /// Hermitian matrix of u·d̂ over all sublevels for a real polarization u.
    pub fn coupling_matrix(&self, u: [f64; 3]) -> CMat {
        let n = self.dim();
        let mut g: CMat = CMat::zeros((n, n));
        for c in &self.couplings {
            let mut el = C64::new(0.0, 0.0);
            for ax in 0..3 {
                el += c.component[ax] * u[ax];
            }
            g[[c.upper, c.lower]] += el;
            g[[c.lower, c.upper]] += el.conj();
        }
        g
    }

    /// Full Cartesian dipole-operator matrix for one axis (0 = x, 1 = y, 2 = z).
    pub fn dipole_matrix(&self, axis: usize) -> CMat {
        let n = self.dim();
        let mut g: CMat = CMat::zeros((n, n));
        for c in &self.couplings {
            g[[c.upper, c.lower]] += c.component[axis];
            g[[c.lower, c.upper]] += c.component[axis].conj();
        }
        g
    }

    /// Energies as a vector, for building diagonal free-evolution phases.
    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    /// Return a copy with every sublevel shifted by mJ · 2π · ν_z. The shifted
    /// scheme is a derived object; the ground-at-zero invariant applies to the
    /// file data before the shift.
    pub fn with_zeeman_shift(&self, nu_z_hz: f64) -> LevelScheme {
        let mut s = self.clone();
        for l in &mut s.levels {
            l.energy += 0.5 * l.two_mj as f64 * TAU * nu_z_hz;
        }
        s
    }

    /// Sum of Zeeman-resolved decay rates out of sublevel `idx`, reconstructed
    /// from the stored Cartesian dipole components.
    pub fn decay_rate_from_couplings(&self, idx: usize) -> f64 {
        self.couplings
            .iter()
            .filter(|c| c.upper == idx)
            .map(|c| {
                let w = self.levels[c.upper].energy - self.levels[c.lower].energy;
                let d2: f64 = c.component.iter().map(|z| z.norm_sqr()).sum();
                w.powi(3) * d2 / DIPOLE_SUM_RULE
            })
            .sum()
    }

    fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::Scheme("no levels".into()));
        }
        let ground = self
            .levels
            .iter()
            .cloned()
            .reduce(|a, b| if b.energy < a.energy { b } else { a })
            .unwrap();
        if ground.energy != 0.0 {
            return Err(Error::Scheme(format!(
                "ground level {} has energy {:.6e}, must be exactly 0",
                ground.name(),
                ground.energy
            )));
        }
        for l in &self.levels {
            if l.two_mj.abs() > l.two_j || (l.two_j - l.two_mj) % 2 != 0 {
                return Err(Error::Scheme(format!("bad mJ on level {}", l.name())));
            }
            if l.linewidth < 0.0 {
                return Err(Error::Scheme(format!("negative linewidth on {}", l.name())));
            }
        }
        // 1% branching sum rule on every radiating sublevel
        for (i, l) in self.levels.iter().enumerate() {
            if l.linewidth > 0.0 {
                let sum = self.decay_rate_from_couplings(i);
                let rel = (sum - l.linewidth).abs() / l.linewidth;
                if rel > 0.01 {
                    return Err(Error::Scheme(format!(
                        "decay channels from {} sum to {:.4e} s^-1, stored linewidth {:.4e} (off by {:.2}%)",
                        l.name(),
                        sum,
                        l.linewidth,
                        rel * 100.0
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Reduced dipole matrix element |⟨u‖d‖l⟩| in e·a₀ from a decay rate,
/// γ = ω³ |⟨d⟩|² / (3πε₀ħc³) with |⟨d⟩|² = |⟨u‖d‖l⟩|²/(2J_u+1).
pub fn dipole_from_decay_rate(gamma: f64, omega: f64, two_j_up: i32) -> Result<f64> {
    if gamma <= 0.0 || omega <= 0.0 {
        return Err(Error::Physics(format!(
            "dipole_from_decay_rate needs positive inputs, got gamma = {gamma:.3e}, omega = {omega:.3e}"
        )));
    }
    Ok(((two_j_up as f64 + 1.0) * DIPOLE_SUM_RULE * gamma / omega.powi(3)).sqrt())
}

/// Spherical components (q = -1, 0, +1) of ⟨u m_u|d̂|l m_l⟩ given the reduced
/// element, converted to Cartesian [x, y, z].
fn cartesian_components(
    reduced: f64,
    two_j_up: i32,
    two_m_up: i32,
    two_j_lo: i32,
    two_m_lo: i32,
) -> [C64; 3] {
    let dq: Vec<f64> = [-1, 0, 1]
        .iter()
        .map(|&q| reduced * dipole_projection(two_j_up, two_m_up, two_j_lo, two_m_lo, q))
        .collect();
    // d_x = (d_{-1} - d_{+1})/√2, d_y = i (d_{-1} + d_{+1})/√2, d_z = d_0
    [
        C64::new((dq[0] - dq[2]) / SQRT_2, 0.0),
        C64::new(0.0, (dq[0] + dq[2]) / SQRT_2),
        C64::new(dq[1], 0.0),
    ]
}

fn parse_half(s: &str) -> Option<i32> {
    if let Some(num) = s.strip_suffix("/2") {
        num.trim().parse::<i32>().ok()
    } else {
        s.trim().parse::<i32>().ok().map(|v| 2 * v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Header,
    Levels,
    Lines,
}

struct Manifold {
    label: String,
    energy: f64,
    two_j: i32,
    first_index: usize,
}

/// Parse a level-scheme document (see `data/ca40.levels` for the grammar).
pub fn parse_level_scheme(text: &str) -> Result<LevelScheme> {
    let mut species = String::new();
    let mut mass = 0.0_f64;
    let mut unit: Option<f64> = None;
    let mut section = Section::Header;
    let mut manifolds: Vec<Manifold> = Vec::new();
    let mut levels: Vec<Level> = Vec::new();
    let mut couplings: Vec<DipoleCoupling> = Vec::new();
    let mut version = None;

    let by_label = |ms: &[Manifold], label: &str| -> Result<usize> {
        ms.iter()
            .position(|m| m.label == label)
            .ok_or_else(|| Error::Scheme(format!("LINES references unknown level '{label}'")))
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Scheme(format!("line {}: {}", lineno + 1, msg));
        let fields: Vec<&str> = line.split_whitespace().collect();
        match (section, fields[0]) {
            (Section::Header, "VERSION") => {
                version = Some(
                    fields
                        .get(1)
                        .and_then(|v| v.parse::<u32>().ok())
                        .ok_or_else(|| err("bad VERSION".into()))?,
                );
            }
            (Section::Header, "SPECIES") => {
                species = fields.get(1).ok_or_else(|| err("bad SPECIES".into()))?.to_string();
            }
            (Section::Header, "MASS_KG") => {
                mass = fields
                    .get(1)
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| err("bad MASS_KG".into()))?;
            }
            (Section::Header, "UNIT") => {
                unit = Some(match fields.get(1).copied() {
                    Some("cm-1") => CM_INV,
                    Some("THz") => TAU * 1e12,
                    Some(other) => return Err(err(format!("unknown unit tag '{other}'"))),
                    None => return Err(err("missing unit tag".into())),
                });
            }
            (Section::Header, "LEVELS") => section = Section::Levels,
            (Section::Levels, "LINES") => section = Section::Lines,
            (Section::Levels, label) => {
                if fields.len() != 4 {
                    return Err(err(format!("LEVELS row needs 4 fields, got {}", fields.len())));
                }
                let scale = unit.ok_or_else(|| err("LEVELS before UNIT tag".into()))?;
                let energy = fields[1]
                    .parse::<f64>()
                    .map_err(|_| err("bad energy".into()))?
                    * scale;
                let two_j =
                    parse_half(fields[2]).ok_or_else(|| err(format!("bad J '{}'", fields[2])))?;
                let linewidth = fields[3]
                    .parse::<f64>()
                    .map_err(|_| err("bad linewidth".into()))?;
                orbital_of(label)?;
                let first_index = levels.len();
                let mut two_mj = -two_j;
                while two_mj <= two_j {
                    levels.push(Level {
                        label: label.to_string(),
                        energy,
                        two_j,
                        two_mj,
                        linewidth,
                    });
                    two_mj += 2;
                }
                manifolds.push(Manifold {
                    label: label.to_string(),
                    energy,
                    two_j,
                    first_index,
                });
            }
            (Section::Lines, upper_label) => {
                if fields.len() != 3 {
                    return Err(err(format!("LINES row needs 3 fields, got {}", fields.len())));
                }
                let ui = by_label(&manifolds, upper_label)?;
                let li = by_label(&manifolds, fields[1])?;
                let rate = fields[2]
                    .parse::<f64>()
                    .map_err(|_| err("bad decay rate".into()))?;
                let (up, lo) = (&manifolds[ui], &manifolds[li]);
                if up.energy <= lo.energy {
                    return Err(err(format!(
                        "'{}' is not above '{}'",
                        up.label, lo.label
                    )));
                }
                if !dipole_allowed(orbital_of(&up.label)?, orbital_of(&lo.label)?) {
                    return Err(err(format!(
                        "dipole coupling {} - {} violates the parity selection rule",
                        up.label, lo.label
                    )));
                }
                let omega = up.energy - lo.energy;
                let reduced = dipole_from_decay_rate(rate, omega, up.two_j)?;
                for (a, mu) in (0..).zip((-up.two_j..=up.two_j).step_by(2)) {
                    for (b, ml) in (0..).zip((-lo.two_j..=lo.two_j).step_by(2)) {
                        let comp = cartesian_components(reduced, up.two_j, mu, lo.two_j, ml);
                        if comp.iter().any(|z| z.norm_sqr() > 0.0) {
                            couplings.push(DipoleCoupling {
                                upper: up.first_index + a,
                                lower: lo.first_index + b,
                                component: comp,
                            });
                        }
                    }
                }
            }
            (Section::Header, other) => {
                return Err(err(format!("unexpected header token '{other}'")))
            }
        }
    }
    if version.is_none() {
        return Err(Error::Scheme("missing VERSION header".into()));
    }
    if mass <= 0.0 {
        return Err(Error::Scheme("missing or non-positive MASS_KG".into()));
    }

    let scheme = LevelScheme {
        species,
        mass,
        levels,
        couplings,
    };
    scheme.validate()?;
    Ok(scheme)
}

/// Load and validate a level scheme from a file.
pub fn load_level_scheme(path: &Path) -> Result<LevelScheme> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Scheme(format!("cannot read '{}': {e}", path.display()))
    })?;
    parse_level_scheme(&text)
}

impl fmt::Display for LevelScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}: {} sublevels, {} couplings", self.species, self.dim(), self.couplings.len())?;
        let mut seen: HashMap<&str, (f64, i32)> = HashMap::new();
        for l in &self.levels {
            seen.entry(&l.label).or_insert((l.energy, l.two_j));
        }
        let mut rows: Vec<_> = seen.into_iter().collect();
        rows.sort_by(|a, b| a.1 .0.partial_cmp(&b.1 .0).unwrap());
        for (label, (e, two_j)) in rows {
            writeln!(
                f,
                "  {label:<6} J={:<4} E/2pi = {:.6} THz",
                fmt_half(two_j),
                e / TAU / 1e12
            )?;
        }
        Ok(())
    }
}
