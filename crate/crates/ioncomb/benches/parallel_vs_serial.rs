//! Rayon-parallel versus sequential timings for the data-parallel inner
//! loops: the phase-profile grid and the open-system position sweep.
//!
//! Build with the default `parallel` feature to compare both paths; without
//! it the parallel entry points fall back to the same sequential code and the
//! two bars coincide.

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64 as C64;

use ioncomb::atomic::{DipoleCoupling, Level, LevelScheme};
use ioncomb::comb::CombConfig;
use ioncomb::lindblad::{self, PhononMode, SimOptions, SweepSettings};
use ioncomb::magnus;

fn bench_phase_profile(c: &mut Criterion) {
    let scheme = LevelScheme::ca40();
    let cfg = CombConfig::default_params();
    let l0 = scheme.sublevel("D5/2:-1/2").unwrap();
    let l1 = scheme.sublevel("S1/2:-1/2").unwrap();
    let grid = magnus::default_grid(&cfg, 48, 1.5e-6);

    let mut g = c.benchmark_group("phase_profile_48pt");
    g.sample_size(10);
    g.bench_function("parallel", |b| {
        b.iter(|| magnus::phase_profile(&scheme, &cfg, l0, l1, &grid).unwrap())
    });
    g.bench_function("sequential", |b| {
        b.iter(|| magnus::phase_profile_seq(&scheme, &cfg, l0, l1, &grid).unwrap())
    });
    g.finish();
}

fn toy_scheme(cfg: &CombConfig) -> LevelScheme {
    let tau = cfg.pulse_duration;
    let wc = cfg.carrier_frequency();
    let zero = C64::new(0.0, 0.0);
    let levels = vec![
        Level { label: "S0".into(), energy: 0.0, two_j: 1, two_mj: -1, linewidth: 0.0 },
        Level { label: "S1".into(), energy: wc + 8.0 / tau, two_j: 1, two_mj: -1, linewidth: 0.0 },
        Level { label: "S2".into(), energy: wc + 12.0 / tau, two_j: 1, two_mj: -1, linewidth: 0.0 },
    ];
    let couplings = vec![
        DipoleCoupling { upper: 1, lower: 0, component: [zero, zero, C64::new(0.5, 0.0)] },
        DipoleCoupling { upper: 2, lower: 0, component: [zero, zero, C64::new(0.4, 0.0)] },
    ];
    LevelScheme::from_parts("toy", 6.6e-26, levels, couplings).unwrap()
}

fn bench_sweep(c: &mut Criterion) {
    let cfg = {
        let mut c = CombConfig::default_params();
        c.n_pulses = 2;
        c
    };
    let scheme = toy_scheme(&cfg);
    let settings = SweepSettings {
        qubit_levels: (0, 1),
        amplitudes: (
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ),
        mode: PhononMode {
            eta: 0.09,
            omega: std::f64::consts::TAU * 600e3,
        },
    };
    let opts = SimOptions {
        n_max: 2,
        rtol: 1e-9,
        ..Default::default()
    };
    let positions: Vec<f64> = (0..8).map(|i| (i as f64 - 3.5) * 40e-9).collect();

    let mut g = c.benchmark_group("toy_sweep_8x2pairs");
    g.sample_size(10);
    g.bench_function("parallel", |b| {
        b.iter(|| lindblad::sweep_positions(&scheme, &cfg, &settings, &opts, &positions).unwrap())
    });
    g.bench_function("sequential", |b| {
        b.iter(|| {
            lindblad::sweep_positions_seq(&scheme, &cfg, &settings, &opts, &positions).unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, bench_phase_profile, bench_sweep);
criterion_main!(benches);
