//! Open-system verification: the full electronic scheme coupled to a truncated
//! vibrational Fock space, driven by the time-dependent comb field with
//! radiative decay of the P levels.
//!
//! Time stepping is hybrid. The field is nonzero only inside narrow windows
//! around each pulse pair (|t - center| ≤ 8τ), where the unitary propagator is
//! integrated directly with the adaptive Runge-Kutta scheme; between windows
//! the evolution is the exact free interaction-picture map plus the exact
//! exponential decay map. Because the carrier-envelope phase is pulse-locked,
//! the window Hamiltonians of successive pairs are related by free-phase
//! conjugation, so one window integration serves the whole train:
//! U_k = Φ_k U₀ Φ_k† with Φ_k = diag(e^{i ν_i k T}).
//!
//! Inside one 16τ window the vibrational phase ω_s t advances by ~1e-6 rad, so
//! the mode quadrature operator is frozen at the window center. Diagonalizing
//! it splits the window integration into independent electronic blocks, one
//! per quadrature eigenvalue. The field enters the Lamb-Dicke-linearized
//! Hamiltonian
//!
//! ```text
//! H_I(t) = -E(t, x₀)·D̂(t) ⊗ 1 - ∂E/∂x(t, x₀)·D̂(t) ⊗ Σ_s (η_s/k_c) Q_s(ω_s t)
//! ```
//!
//! with D̂(t) the interaction-picture dipole coupling and Q(φ) = a e^{-iφ} +
//! a† e^{iφ}.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::atomic::LevelScheme;
use crate::comb::{self, CombConfig};
use crate::constants::C;
use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::{self, CMat};
use crate::magnus;
use crate::ode::{self, OdeOptions};

/// One vibrational mode seen by the addressed ion.
#[derive(Debug, Clone, Copy)]
pub struct PhononMode {
    pub eta: f64,
    /// Mode angular frequency (rad/s).
    pub omega: f64,
}

/// Spontaneous-decay channel |upper⟩ → |lower⟩ with its Zeeman-resolved rate.
#[derive(Debug, Clone, Copy)]
pub struct DecayChannel {
    pub upper: usize,
    pub lower: usize,
    pub rate: f64,
}

/// Zeeman-resolved decay channels of a scheme. Levels with zero stored
/// linewidth are treated as stable regardless of their couplings.
pub fn decay_channels(scheme: &LevelScheme) -> Vec<DecayChannel> {
    let mut out = Vec::new();
    for c in &scheme.couplings {
        if scheme.levels[c.upper].linewidth <= 0.0 {
            continue;
        }
        let w = scheme.levels[c.upper].energy - scheme.levels[c.lower].energy;
        let d2: f64 = c.component.iter().map(|z| z.norm_sqr()).sum();
        let rate = w.powi(3) * d2 / crate::constants::DIPOLE_SUM_RULE;
        if rate > 0.0 {
            out.push(DecayChannel {
                upper: c.upper,
                lower: c.lower,
                rate,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    /// Fock cutoff per mode: states 0..=n_max are kept.
    pub n_max: usize,
    /// Tolerances of the in-window propagator integration.
    pub rtol: f64,
    pub atol: f64,
    /// Window half-width in units of the pulse duration.
    pub window_halfwidth: f64,
    /// Population allowed in the top Fock level before the run is aborted.
    pub fock_leak_limit: f64,
    /// Refuse to build combined spaces larger than this.
    pub max_dim: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            n_max: 5,
            rtol: 1e-10,
            atol: 1e-13,
            window_halfwidth: 8.0,
            fock_leak_limit: 1e-6,
            max_dim: 4096,
        }
    }
}

/// Density matrix over (electronic ⊗ Fock) with its basis bookkeeping.
#[derive(Debug, Clone)]
pub struct SimState {
    pub rho: CMat,
    pub dim_el: usize,
    pub fock_dims: Vec<usize>,
    pub time: f64,
}

impl SimState {
    pub fn fock_total(&self) -> usize {
        self.fock_dims.iter().product::<usize>().max(1)
    }

    pub fn dim(&self) -> usize {
        self.dim_el * self.fock_total()
    }

    /// Basis index of electronic level `el` with the modes in `fock` levels.
    pub fn index(&self, el: usize, fock: &[usize]) -> usize {
        let mut f = 0;
        for (n, dim) in fock.iter().zip(&self.fock_dims) {
            f = f * dim + n;
        }
        el * self.fock_total() + f
    }

    /// Pure state Σ amp|el⟩ ⊗ |0...0⟩ as a density matrix.
    pub fn pure(amplitudes: &[(usize, C64)], dim_el: usize, fock_dims: Vec<usize>) -> SimState {
        let fock_total = fock_dims.iter().product::<usize>().max(1);
        let dim = dim_el * fock_total;
        let mut psi = vec![C64::new(0.0, 0.0); dim];
        let norm: f64 = amplitudes.iter().map(|a| a.1.norm_sqr()).sum();
        for &(el, amp) in amplitudes {
            psi[el * fock_total] = amp / norm.sqrt();
        }
        let mut rho: CMat = Array2::zeros((dim, dim));
        for i in 0..dim {
            for j in 0..dim {
                rho[[i, j]] = psi[i] * psi[j].conj();
            }
        }
        SimState {
            rho,
            dim_el,
            fock_dims,
            time: 0.0,
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.rho[[i, i]].re).sum()
    }

    pub fn trace_deficit(&self) -> f64 {
        (self.trace() - 1.0).abs()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::frobenius(&(&self.rho - &linalg::dagger(&self.rho)))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *linalg::hermitian_eigenvalues(&self.rho)
            .first()
            .unwrap_or(&0.0)
    }

    /// Population of one electronic level, traced over the Fock space.
    pub fn level_population(&self, el: usize) -> f64 {
        let f = self.fock_total();
        (0..f).map(|m| self.rho[[el * f + m, el * f + m]].re).sum()
    }

    /// Joint Fock distribution, traced over the electronic space.
    pub fn fock_distribution(&self) -> Vec<f64> {
        let f = self.fock_total();
        let mut p = vec![0.0; f];
        for el in 0..self.dim_el {
            for (m, pm) in p.iter_mut().enumerate() {
                *pm += self.rho[[el * f + m, el * f + m]].re;
            }
        }
        p
    }

    /// Probability of any vibrational excitation, 1 - P(all modes in 0).
    pub fn phonon_excitation(&self) -> f64 {
        let f = self.fock_total();
        let mut ground = 0.0;
        for el in 0..self.dim_el {
            ground += self.rho[[el * f, el * f]].re;
        }
        1.0 - ground / self.trace().max(f64::MIN_POSITIVE)
    }

    /// Total population in the top Fock level of any mode (cutoff monitor).
    pub fn top_fock_population(&self) -> f64 {
        if self.fock_dims.is_empty() {
            return 0.0;
        }
        let f = self.fock_total();
        let mut total = 0.0;
        for el in 0..self.dim_el {
            for m in 0..f {
                let mut rest = m;
                let mut top = false;
                for &dim in self.fock_dims.iter().rev() {
                    if rest % dim == dim - 1 {
                        top = true;
                    }
                    rest /= dim;
                }
                if top {
                    total += self.rho[[el * f + m, el * f + m]].re;
                }
            }
        }
        total
    }

    pub fn mean_phonon(&self) -> f64 {
        let f = self.fock_total();
        let mut n_avg = 0.0;
        for el in 0..self.dim_el {
            for m in 0..f {
                let mut rest = m;
                let mut n_total = 0usize;
                for &dim in self.fock_dims.iter().rev() {
                    n_total += rest % dim;
                    rest /= dim;
                }
                n_avg += n_total as f64 * self.rho[[el * f + m, el * f + m]].re;
            }
        }
        n_avg
    }
}

/// Simulation context shared by the window builder and the train loop.
pub struct SimSetup<'a> {
    pub scheme: &'a LevelScheme,
    pub cfg: &'a CombConfig,
    /// Ion equilibrium coordinate.
    pub x0: f64,
    pub modes: Vec<PhononMode>,
}

impl SimSetup<'_> {
    fn fock_dims(&self, opts: &SimOptions) -> Vec<usize> {
        self.modes.iter().map(|_| opts.n_max + 1).collect()
    }

    fn check_dim(&self, opts: &SimOptions) -> Result<usize> {
        let f: usize = self.fock_dims(opts).iter().product::<usize>().max(1);
        let dim = self.scheme.dim() * f;
        if dim > opts.max_dim {
            return Err(Error::Config(format!(
                "combined state space of dimension {dim} exceeds the limit {} \
                 (density matrix would need {:.1} MiB)",
                opts.max_dim,
                (dim * dim * 16) as f64 / (1024.0 * 1024.0)
            )));
        }
        Ok(dim)
    }
}

/// Truncated mode quadrature a + a† and its eigendecomposition.
fn quadrature_eigen(n_fock: usize) -> (Vec<f64>, CMat) {
    let mut q: CMat = Array2::zeros((n_fock, n_fock));
    for n in 0..n_fock - 1 {
        let v = ((n + 1) as f64).sqrt();
        q[[n, n + 1]] = C64::new(v, 0.0);
        q[[n + 1, n]] = C64::new(v, 0.0);
    }
    linalg::hermitian_eigen(&q)
}

/// The full window-0 unitary on (electronic ⊗ Fock), built from one adaptive
/// integration per quadrature branch.
pub fn window_unitary(setup: &SimSetup, opts: &SimOptions) -> Result<CMat> {
    let dim = setup.check_dim(opts)?;
    let scheme = setup.scheme;
    let cfg = setup.cfg;
    let n_el = scheme.dim();
    let kc = cfg.carrier_frequency() / C;
    let g = scheme.coupling_matrix(cfg.polarization);
    let e = scheme.energies();

    // sparse coupling entries (a, b, G_ab)
    let entries: Vec<(usize, usize, C64)> = (0..n_el)
        .flat_map(|a| (0..n_el).map(move |b| (a, b)))
        .filter(|&(a, b)| g[[a, b]].norm_sqr() > 0.0)
        .map(|(a, b)| (a, b, g[[a, b]]))
        .collect();

    let t_mid = 0.5 * (cfg.arrival_1(setup.x0) + cfg.arrival_2(setup.x0));
    let half = opts.window_halfwidth * cfg.pulse_duration
        + 0.5 * (cfg.arrival_1(setup.x0) - cfg.arrival_2(setup.x0)).abs();

    // per-mode quadrature eigenbases with the window-center phase folded in
    let fock_dims = setup.fock_dims(opts);
    let mut vs: Vec<CMat> = Vec::new();
    let mut qvals: Vec<Vec<f64>> = Vec::new();
    for (mode, &nf) in setup.modes.iter().zip(&fock_dims) {
        let (q, w) = quadrature_eigen(nf);
        let phi = mode.omega * t_mid;
        let mut v = w;
        for n in 0..nf {
            let ph = C64::from_polar(1.0, -phi * n as f64);
            for j in 0..nf {
                v[[n, j]] *= ph;
            }
        }
        vs.push(v);
        qvals.push(q);
    }
    let fock_total: usize = fock_dims.iter().product::<usize>().max(1);

    // enumerate quadrature branches; each gets one electronic integration
    let branches: Vec<Vec<usize>> = (0..fock_total)
        .map(|mut m| {
            let mut idx = vec![0; fock_dims.len()];
            for (k, &dimk) in fock_dims.iter().enumerate().rev() {
                idx[k] = m % dimk;
                m /= dimk;
            }
            idx
        })
        .collect();

    let ode_opts = OdeOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        h_initial: cfg.pulse_duration * 1e-4,
        max_steps: 4_000_000,
    };

    let branch_us = exec::map_indexed(branches.len(), |bi| -> Result<CMat> {
        let disp: f64 = branches[bi]
            .iter()
            .zip(&setup.modes)
            .zip(&qvals)
            .map(|((&j, mode), q)| mode.eta / kc * q[j])
            .sum();
        let rhs = |t: f64, u: &ode::State| -> ode::State {
            let coef = comb::pair_field_amplitude(cfg, t, setup.x0, 0)
                + disp * comb::pair_field_gradient(cfg, t, setup.x0, 0);
            let phases: Vec<C64> = e.iter().map(|&ei| C64::from_polar(1.0, ei * t)).collect();
            let mut du: CMat = Array2::zeros((n_el, n_el));
            for &(a, b, gab) in &entries {
                // dU = -i H U with H_ab = -coef · G_ab · e^{i(ε_a-ε_b)t}
                let hab = C64::new(0.0, coef) * gab * phases[a] * phases[b].conj();
                for j in 0..n_el {
                    du[[a, j]] += hab * u[[b, j]];
                }
            }
            du
        };
        let (u, _stats) = ode::integrate(
            rhs,
            t_mid - half,
            t_mid + half,
            linalg::identity(n_el),
            &ode_opts,
        )?;
        Ok(u)
    });

    // assemble Σ_J U_J ⊗ v_J v_J†
    let mut full: CMat = Array2::zeros((dim, dim));
    for (bi, branch) in branches.iter().enumerate() {
        let u_j = branch_us[bi]
            .as_ref()
            .map_err(|e| Error::Ode(format!("window integration failed: {e}")))?;
        // v_J[M] = Π_s V_s[M_s, J_s]
        let mut v = vec![C64::new(1.0, 0.0); fock_total];
        for (m, vm) in v.iter_mut().enumerate() {
            let mut rest = m;
            let mut val = C64::new(1.0, 0.0);
            for (k, &dimk) in fock_dims.iter().enumerate().rev() {
                let mk = rest % dimk;
                rest /= dimk;
                val *= vs[k][[mk, branch[k]]];
            }
            *vm = val;
        }
        for a in 0..n_el {
            for b in 0..n_el {
                let uab = u_j[[a, b]];
                if uab.norm_sqr() < 1e-60 {
                    continue;
                }
                for m in 0..fock_total {
                    for n in 0..fock_total {
                        full[[a * fock_total + m, b * fock_total + n]] += uab * v[m] * v[n].conj();
                    }
                }
            }
        }
    }
    Ok(full)
}

/// Exact decay map over a field-free interval: amplitude damping of every
/// radiating level plus the integrated population feed into its channels.
fn apply_decay(state: &mut SimState, scheme: &LevelScheme, channels: &[DecayChannel], dt: f64) {
    if dt <= 0.0 {
        return;
    }
    let f = state.fock_total();
    let dim = state.dim();
    let gammas: Vec<f64> = scheme.levels.iter().map(|l| l.linewidth).collect();
    // integrated feed weights and pre-damping snapshots of the upper blocks
    let mut feeds: Vec<(usize, usize, f64)> = Vec::new();
    for c in channels {
        let g_tot = gammas[c.upper];
        let w = c.rate / g_tot * (1.0 - (-g_tot * dt).exp());
        feeds.push((c.upper, c.lower, w));
    }
    let upper_blocks: Vec<(usize, CMat)> = feeds
        .iter()
        .map(|&(u, _, _)| u)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .map(|u| {
            let mut block: CMat = Array2::zeros((f, f));
            for m in 0..f {
                for n in 0..f {
                    block[[m, n]] = state.rho[[u * f + m, u * f + n]];
                }
            }
            (u, block)
        })
        .collect();

    // amplitude damping of all entries involving radiating levels
    for i in 0..dim {
        let gi = gammas[i / f];
        for j in 0..dim {
            let gj = gammas[j / f];
            if gi > 0.0 || gj > 0.0 {
                state.rho[[i, j]] *= (-(gi + gj) * dt / 2.0).exp();
            }
        }
    }
    // population feed, preserving the upper block's Fock coherences
    for &(u, l, w) in &feeds {
        let block = &upper_blocks.iter().find(|b| b.0 == u).unwrap().1;
        for m in 0..f {
            for n in 0..f {
                state.rho[[l * f + m, l * f + n]] += w * block[[m, n]];
            }
        }
    }
    state.time += dt;
}

/// Result of a train evolution.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub state: SimState,
    pub windows: u32,
}

/// Evolve an initial state through the full pulse train. One window unitary is
/// integrated, then reused for every pair through free-phase conjugation;
/// field-free stretches apply the exact decay map.
pub fn evolve_train(setup: &SimSetup, initial: &SimState, opts: &SimOptions) -> Result<TrainResult> {
    let dim = setup.check_dim(opts)?;
    if initial.rho.nrows() != dim {
        return Err(Error::Config(format!(
            "initial state dimension {} does not match the simulation space {dim}",
            initial.rho.nrows()
        )));
    }
    let scheme = setup.scheme;
    let cfg = setup.cfg;
    let channels = decay_channels(scheme);
    let u_win = window_unitary(setup, opts)?;

    let f = initial.fock_total();
    let e = scheme.energies();
    // interaction-picture frequency of each basis state
    let nu: Vec<f64> = (0..dim)
        .map(|i| {
            let el = i / f;
            let mut rest = i % f;
            let mut w = e[el];
            for (k, &dimk) in initial.fock_dims.iter().enumerate().rev() {
                w += (rest % dimk) as f64 * setup.modes[k].omega;
                rest /= dimk;
            }
            w
        })
        .collect();

    let period = cfg.period();
    let mut state = initial.clone();
    let mut m_k: CMat = Array2::zeros((dim, dim));
    for k in 0..cfg.n_pulses {
        apply_decay(&mut state, scheme, &channels, period / 2.0);
        let t_k = k as f64 * period;
        for i in 0..dim {
            for j in 0..dim {
                m_k[[i, j]] = u_win[[i, j]] * C64::from_polar(1.0, (nu[i] - nu[j]) * t_k);
            }
        }
        state.rho = m_k.dot(&state.rho).dot(&linalg::dagger(&m_k));
        apply_decay(&mut state, scheme, &channels, period / 2.0);

        if k % 50 == 49 || k + 1 == cfg.n_pulses {
            let leak = state.top_fock_population();
            if leak > opts.fock_leak_limit {
                return Err(Error::FockCutoff {
                    leak,
                    limit: opts.fock_leak_limit,
                });
            }
        }
    }
    Ok(TrainResult {
        state,
        windows: cfg.n_pulses,
    })
}

/// Instantaneous Liouvillian action with the full (non-frozen) mode phases:
/// dρ/dt = -i[H_I(t), ρ] + Σ_c γ_c (S⁻ρS⁺ - ½{S⁺S⁻, ρ}).
pub fn liouvillian_apply(setup: &SimSetup, fock_dims: &[usize], t: f64, rho: &CMat) -> CMat {
    let scheme = setup.scheme;
    let cfg = setup.cfg;
    let n_el = scheme.dim();
    let f: usize = fock_dims.iter().product::<usize>().max(1);
    let kc = cfg.carrier_frequency() / C;
    let g = scheme.coupling_matrix(cfg.polarization);
    let e = scheme.energies();

    // displacement Σ_s (η_s/k_c)(a e^{-iωt} + a† e^{iωt}) over the Fock space
    let mut disp: CMat = Array2::zeros((f, f));
    for (k, mode) in setup.modes.iter().enumerate() {
        let nf = fock_dims[k];
        let ph = C64::from_polar(1.0, -mode.omega * t);
        let stride: usize = fock_dims[k + 1..].iter().product();
        for m in 0..f {
            let mk = (m / stride) % nf;
            if mk + 1 < nf {
                let val = mode.eta / kc * ((mk + 1) as f64).sqrt();
                let m_up = m + stride;
                disp[[m, m_up]] += ph * val; // a
                disp[[m_up, m]] += ph.conj() * val; // a†
            }
        }
    }

    // pulse pairs are separable; only the nearest pair contributes at time t
    let k = ((t / cfg.period()).round().max(0.0) as u32).min(cfg.n_pulses.saturating_sub(1));
    let field = comb::pair_field_amplitude(cfg, t, setup.x0, k);
    let grad = comb::pair_field_gradient(cfg, t, setup.x0, k);

    let dim = n_el * f;
    let mut h: CMat = Array2::zeros((dim, dim));
    for a in 0..n_el {
        for b in 0..n_el {
            if g[[a, b]].norm_sqr() == 0.0 {
                continue;
            }
            let dab = -g[[a, b]] * C64::from_polar(1.0, (e[a] - e[b]) * t);
            for m in 0..f {
                h[[a * f + m, b * f + m]] += dab * field;
                for n in 0..f {
                    if disp[[m, n]].norm_sqr() > 0.0 {
                        h[[a * f + m, b * f + n]] += dab * grad * disp[[m, n]];
                    }
                }
            }
        }
    }

    let hr = h.dot(rho);
    let rh = rho.dot(&h);
    let mut drho = (&hr - &rh).mapv(|z| z * C64::new(0.0, -1.0));

    for c in decay_channels(scheme) {
        let (u, l, rate) = (c.upper, c.lower, c.rate);
        for m in 0..f {
            for n in 0..f {
                let feed = rho[[u * f + m, u * f + n]];
                drho[[l * f + m, l * f + n]] += rate * feed;
            }
        }
        // -(γ/2){|u⟩⟨u| ⊗ 1, ρ}
        for m in 0..f {
            let i = u * f + m;
            let half = C64::new(0.5 * rate, 0.0);
            for j in 0..dim {
                let a = rho[[i, j]] * half;
                drho[[i, j]] -= a;
                let b = rho[[j, i]] * half;
                drho[[j, i]] -= b;
            }
        }
    }
    drho
}

/// Direct adaptive integration of the master equation on the density matrix;
/// the reference path for small systems and tests.
pub fn evolve_rho_direct(
    setup: &SimSetup,
    initial: &SimState,
    t0: f64,
    t1: f64,
    opts: &SimOptions,
) -> Result<SimState> {
    let fock_dims = initial.fock_dims.clone();
    let rhs =
        |t: f64, rho: &ode::State| -> ode::State { liouvillian_apply(setup, &fock_dims, t, rho) };
    let (rho, _) = ode::integrate(
        rhs,
        t0,
        t1,
        initial.rho.clone(),
        &OdeOptions {
            rtol: opts.rtol,
            atol: opts.atol,
            h_initial: 0.0,
            max_steps: 4_000_000,
        },
    )?;
    let mut out = initial.clone();
    out.rho = rho;
    out.time = t1;
    Ok(out)
}

/// Acquired qubit phase θ = Arg⟨ψ₀|ρ|ψ₁⟩ with both levels in the vibrational
/// ground state.
pub fn extract_phase(state: &SimState, level0: usize, level1: usize) -> Result<f64> {
    let zeros = vec![0; state.fock_dims.len()];
    let i0 = state.index(level0, &zeros);
    let i1 = state.index(level1, &zeros);
    let coh = state.rho[[i0, i1]];
    if coh.norm() < 1e-6 {
        return Err(Error::Physics(format!(
            "qubit coherence magnitude {:.3e} below 1e-6; phase undefined",
            coh.norm()
        )));
    }
    Ok(coh.arg())
}

/// Population and cutoff diagnostics of a final state.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub level_populations: Vec<f64>,
    pub fock_distribution: Vec<f64>,
    pub mean_phonon: f64,
    pub phonon_excitation: f64,
    pub trace_deficit: f64,
    pub top_fock_population: f64,
}

pub fn diagnostics(state: &SimState) -> Diagnostics {
    Diagnostics {
        level_populations: (0..state.dim_el)
            .map(|l| state.level_population(l))
            .collect(),
        fock_distribution: state.fock_distribution(),
        mean_phonon: state.mean_phonon(),
        phonon_excitation: state.phonon_excitation(),
        trace_deficit: state.trace_deficit(),
        top_fock_population: state.top_fock_population(),
    }
}

/// One row of a position sweep, directly comparable against the analytic
/// phase and phonon-excitation predictions.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub x0: f64,
    pub phase: f64,
    pub phase_analytic: f64,
    pub phonon_prob: f64,
    pub phonon_prob_analytic: f64,
    pub nonqubit_pop: f64,
    pub trace_deficit: f64,
}

pub struct SweepSettings {
    pub qubit_levels: (usize, usize),
    /// Initial qubit amplitudes (c₀, c₁).
    pub amplitudes: (C64, C64),
    pub mode: PhononMode,
}

fn sweep_one(
    scheme: &LevelScheme,
    cfg: &CombConfig,
    settings: &SweepSettings,
    opts: &SimOptions,
    x0: f64,
) -> Result<SweepRow> {
    let (l0, l1) = settings.qubit_levels;
    let setup = SimSetup {
        scheme,
        cfg,
        x0,
        modes: vec![settings.mode],
    };
    let initial = SimState::pure(
        &[(l0, settings.amplitudes.0), (l1, settings.amplitudes.1)],
        scheme.dim(),
        vec![opts.n_max + 1],
    );
    let result = evolve_train(&setup, &initial, opts)?;
    let phase = extract_phase(&result.state, l0, l1)?;

    let n = cfg.n_pulses as f64;
    let (p0, p1) = magnus::phase_pair_at(scheme, cfg, l0, l1, x0)?;
    // Arg⟨ψ₀|ρ|ψ₁⟩ grows as N (δθ₀ - δθ₁)
    let phase_analytic = n * (p0 - p1);

    let geom = crate::gate::ChainGeometry::single_ion(x0, settings.mode.eta, settings.mode.omega);
    let w0 = settings.amplitudes.0.norm_sqr();
    let w1 = settings.amplitudes.1.norm_sqr();
    let phonon = crate::budget::phonon_excitation_probability(
        scheme,
        cfg,
        &geom,
        0,
        (l0, l1),
        n * cfg.period(),
        [w0, w1],
    )?;

    let diag = diagnostics(&result.state);
    let nonqubit: f64 = diag
        .level_populations
        .iter()
        .enumerate()
        .filter(|&(l, _)| l != l0 && l != l1)
        .map(|(_, p)| p)
        .sum();

    Ok(SweepRow {
        x0,
        phase,
        phase_analytic,
        phonon_prob: diag.phonon_excitation,
        phonon_prob_analytic: phonon.averaged,
        nonqubit_pop: nonqubit,
        trace_deficit: diag.trace_deficit,
    })
}

/// Sweep the ion coordinate over `positions`; trajectories run concurrently
/// with the `parallel` feature and merge in input order.
pub fn sweep_positions(
    scheme: &LevelScheme,
    cfg: &CombConfig,
    settings: &SweepSettings,
    opts: &SimOptions,
    positions: &[f64],
) -> Result<Vec<SweepRow>> {
    exec::map_indexed(positions.len(), |i| {
        sweep_one(scheme, cfg, settings, opts, positions[i])
    })
    .into_iter()
    .collect()
}

/// Sequential variant of [`sweep_positions`], the benchmark baseline.
pub fn sweep_positions_seq(
    scheme: &LevelScheme,
    cfg: &CombConfig,
    settings: &SweepSettings,
    opts: &SimOptions,
    positions: &[f64],
) -> Result<Vec<SweepRow>> {
    exec::map_indexed_seq(positions.len(), |i| {
        sweep_one(scheme, cfg, settings, opts, positions[i])
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::{DipoleCoupling, Level};
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, TAU};

    fn ca40() -> LevelScheme {
        LevelScheme::ca40()
    }

    fn cfg() -> CombConfig {
        CombConfig::default_params()
    }

    fn qubits(s: &LevelScheme) -> (usize, usize) {
        (
            s.sublevel("D5/2:-1/2").unwrap(),
            s.sublevel("S1/2:-1/2").unwrap(),
        )
    }

    fn toy_scheme(levels: &[(f64, f64)], dz: &[(usize, usize, f64)]) -> LevelScheme {
        let lv: Vec<Level> = levels
            .iter()
            .enumerate()
            .map(|(i, &(e, w))| Level {
                label: format!("S{i}"),
                energy: e,
                two_j: 1,
                two_mj: -1,
                linewidth: w,
            })
            .collect();
        let couplings = dz
            .iter()
            .map(|&(u, l, d)| DipoleCoupling {
                upper: u,
                lower: l,
                component: [C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(d, 0.0)],
            })
            .collect();
        LevelScheme::from_parts("toy", 6.6e-26, lv, couplings).unwrap()
    }

    #[test]
    fn decay_channels_reproduce_linewidths() {
        let s = ca40();
        let channels = decay_channels(&s);
        for (i, l) in s.levels.iter().enumerate() {
            let total: f64 = channels
                .iter()
                .filter(|c| c.upper == i)
                .map(|c| c.rate)
                .sum();
            if l.linewidth > 0.0 {
                assert_relative_eq!(total, l.linewidth, max_relative = 1e-10);
            } else {
                assert_eq!(total, 0.0);
            }
        }
    }

    #[test]
    fn field_off_exponential_decay() {
        let s = ca40();
        let mut c = cfg();
        c.peak_field = 0.0;
        c.n_pulses = 66; // 660 ns of free decay
        let p12 = s.sublevel("P1/2:-1/2").unwrap();
        let setup = SimSetup {
            scheme: &s,
            cfg: &c,
            x0: 0.0,
            modes: vec![],
        };
        let initial = SimState::pure(&[(p12, C64::new(1.0, 0.0))], s.dim(), vec![]);
        let out = evolve_train(&setup, &initial, &SimOptions::default()).unwrap();
        let t = c.n_pulses as f64 * c.period();
        let expected = (-s.levels[p12].linewidth * t).exp();
        let got = out.state.level_population(p12);
        assert_relative_eq!(got, expected, max_relative = 1e-3);
        // decay products split according to the branching ratios
        let s_pop: f64 = out.state.level_population(s.sublevel("S1/2:-1/2").unwrap())
            + out.state.level_population(s.sublevel("S1/2:1/2").unwrap());
        let branching = 1.4e8 / 1.506e8;
        assert_relative_eq!(s_pop, (1.0 - expected) * branching, max_relative = 1e-6);
        assert!(out.state.trace_deficit() < 1e-12);
    }

    #[test]
    fn field_off_superposition_is_stationary() {
        let s = ca40();
        let mut c = cfg();
        c.peak_field = 0.0;
        c.n_pulses = 10;
        let (l0, l1) = qubits(&s);
        let setup = SimSetup {
            scheme: &s,
            cfg: &c,
            x0: 0.0,
            modes: vec![PhononMode {
                eta: 0.09,
                omega: TAU * 600e3,
            }],
        };
        let amp = C64::new(FRAC_1_SQRT_2, 0.0);
        let initial = SimState::pure(&[(l0, amp), (l1, amp)], s.dim(), vec![3]);
        let out = evolve_train(
            &setup,
            &initial,
            &SimOptions {
                n_max: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let diff = linalg::frobenius(&(&out.state.rho - &initial.rho));
        assert!(diff < 1e-12, "zero-field train must be the identity, diff {diff:.3e}");
        assert!(extract_phase(&out.state, l0, l1).unwrap().abs() < 1e-15);
    }

    #[test]
    fn liouvillian_preserves_hermiticity_and_trace() {
        let s = ca40();
        let c = cfg();
        let setup = SimSetup {
            scheme: &s,
            cfg: &c,
            x0: 0.3e-6,
            modes: vec![PhononMode {
                eta: 0.09,
                omega: TAU * 600e3,
            }],
        };
        let (l0, l1) = qubits(&s);
        let amp = C64::new(FRAC_1_SQRT_2, 0.0);
        let state = SimState::pure(&[(l0, amp), (l1, amp)], s.dim(), vec![3]);
        let t = 0.5 * (c.arrival_1(0.3e-6) + c.arrival_2(0.3e-6)); // mid-pulse
        let d = liouvillian_apply(&setup, &[3], t, &state.rho);
        let herm = linalg::frobenius(&(&d - &linalg::dagger(&d)));
        assert!(herm < 1e-10 * linalg::frobenius(&d), "dρ/dt not Hermitian");
        let tr: f64 = (0..d.nrows()).map(|i| d[[i, i]].re).sum();
        assert!(tr.abs() < 1e-8 * linalg::frobenius(&d));
    }

    #[test]
    fn window_machinery_matches_direct_density_integration() {
        // small toy with one mode: 3 electronic levels x 3 Fock states
        let c = {
            let mut c = cfg();
            c.n_pulses = 2;
            c.peak_field *= 3.0; // exaggerate for visibility
            c
        };
        let tau = c.pulse_duration;
        let wc = c.carrier_frequency();
        let s = toy_scheme(
            &[(0.0, 0.0), (wc + 7.0 / tau, 0.0), (wc + 11.0 / tau, 0.0)],
            &[(1, 0, 0.5), (2, 0, 0.4), (2, 1, 0.3)],
        );
        let mode = PhononMode {
            eta: 0.09,
            omega: TAU * 600e3,
        };
        let setup = SimSetup {
            scheme: &s,
            cfg: &c,
            x0: 60e-9, // off center so the gradient coupling acts
            modes: vec![mode],
        };
        let opts = SimOptions {
            n_max: 2,
            rtol: 1e-11,
            ..Default::default()
        };
        let amp = C64::new(FRAC_1_SQRT_2, 0.0);
        let initial = SimState::pure(&[(0, amp), (1, amp)], 3, vec![3]);

        // windowed propagator path
        let windowed = evolve_train(&setup, &initial, &opts).unwrap();

        // direct master-equation stepping through the same windows (field-free
        // stretches contribute nothing here: no decay, interaction picture)
        let mut direct = initial.clone();
        let t_mid = 0.5 * (c.arrival_1(setup.x0) + c.arrival_2(setup.x0));
        let half =
            opts.window_halfwidth * tau + 0.5 * (c.arrival_1(setup.x0) - c.arrival_2(setup.x0)).abs();
        for k in 0..c.n_pulses {
            let t0 = k as f64 * c.period() + t_mid - half;
            let t1 = k as f64 * c.period() + t_mid + half;
            direct = evolve_rho_direct(&setup, &direct, t0, t1, &opts).unwrap();
        }
        let diff = linalg::frobenius(&(&windowed.state.rho - &direct.rho));
        assert!(diff < 1e-7, "windowed vs direct density path: {diff:.3e}");
        let moved = linalg::frobenius(&(&windowed.state.rho - &initial.rho));
        assert!(moved > 1e-3, "trivial test, nothing evolved: {moved:.3e}");
    }

    #[test]
    fn extract_phase_trivial_cases() {
        let s = ca40();
        let (l0, l1) = qubits(&s);
        let amp = C64::new(FRAC_1_SQRT_2, 0.0);
        let plus = SimState::pure(&[(l0, amp), (l1, amp)], s.dim(), vec![]);
        assert_eq!(extract_phase(&plus, l0, l1).unwrap(), 0.0);
        // |0⟩ + e^{iθ}|1⟩: Arg⟨ψ₀|ρ|ψ₁⟩ = -θ
        let theta = 0.731;
        let rotated = SimState::pure(
            &[(l0, amp), (l1, amp * C64::from_polar(1.0, theta))],
            s.dim(),
            vec![],
        );
        assert_relative_eq!(
            extract_phase(&rotated, l0, l1).unwrap(),
            -theta,
            max_relative = 1e-12
        );
        // population-only state: coherence vanished
        let mut mixed = plus.clone();
        let i0 = mixed.index(l0, &[]);
        let i1 = mixed.index(l1, &[]);
        mixed.rho[[i0, i1]] = C64::new(0.0, 0.0);
        mixed.rho[[i1, i0]] = C64::new(0.0, 0.0);
        assert!(extract_phase(&mixed, l0, l1).is_err());
    }

    #[test]
    fn short_train_phase_matches_analytics_and_stays_physical() {
        let s = ca40();
        let mut c = cfg();
        c.n_pulses = 20;
        let (l0, l1) = qubits(&s);
        let mode = PhononMode {
            eta: 0.09,
            omega: TAU * 600e3,
        };
        let setup = SimSetup {
            scheme: &s,
            cfg: &c,
            x0: 0.0,
            modes: vec![mode],
        };
        let amp = C64::new(FRAC_1_SQRT_2, 0.0);
        let opts = SimOptions::default();
        let initial = SimState::pure(&[(l0, amp), (l1, amp)], s.dim(), vec![opts.n_max + 1]);
        let out = evolve_train(&setup, &initial, &opts).unwrap();
        let phase = extract_phase(&out.state, l0, l1).unwrap();
        let (p0, p1) = magnus::phase_pair_at(&s, &c, l0, l1, 0.0).unwrap();
        let analytic = c.n_pulses as f64 * (p0 - p1);
        assert!(phase > 0.0);
        assert_relative_eq!(phase, analytic, max_relative = 0.01);
        // physicality
        assert!(out.state.trace_deficit() < 1e-10);
        assert!(out.state.hermiticity_defect() < 1e-10);
        assert!(out.state.min_eigenvalue() > -1e-10);
        assert!(out.state.phonon_excitation() < 1e-9); // at center: none
    }

    #[test]
    fn refuses_oversized_state_space() {
        let s = ca40();
        let c = cfg();
        let setup = SimSetup {
            scheme: &s,
            cfg: &c,
            x0: 0.0,
            modes: vec![
                PhononMode { eta: 0.09, omega: TAU * 600e3 },
                PhononMode { eta: 0.05, omega: TAU * 1.1e6 },
                PhononMode { eta: 0.04, omega: TAU * 1.7e6 },
            ],
        };
        let opts = SimOptions {
            n_max: 9,
            ..Default::default()
        };
        let err = setup.check_dim(&opts).unwrap_err();
        assert!(err.to_string().contains("exceeds the limit"), "{err}");
    }
}
