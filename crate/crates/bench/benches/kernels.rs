use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use torus_mfg::characteristics::{build_drift, integrate_flow, CouplingPotential, DriftOptions};
use torus_mfg::mfg_solver::{solve_mfg, InitialGuess, PicardOptions, TimeGrid};
use torus_mfg::model::{Hamiltonian, Kernel, ModelSpec};
use torus_mfg::sampler::{sample_gamma_n, GammaSpec};
use torus_mfg::spectral_measure::{dist_w1_1d, evaluate_density, is_in_O_N, nyquist_resolution};
use torus_mfg::Mode;
use torus_mfg_bench::smooth_measure;

fn spectral(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral");
    for order in [8usize, 32, 128] {
        let m = smooth_measure(order);
        group.bench_with_input(BenchmarkId::new("evaluate_density", order), &m, |b, m| {
            b.iter(|| evaluate_density(black_box(m), 4 * order).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("is_in_O_N", order), &m, |b, m| {
            b.iter(|| is_in_O_N(black_box(m), nyquist_resolution(order, 64)).unwrap())
        });
        let other = smooth_measure(order).translate([0.1, 0.0]);
        group.bench_with_input(BenchmarkId::new("dist_w1_1d", order), &m, |b, m| {
            b.iter(|| dist_w1_1d(black_box(m), &other).unwrap())
        });
    }
    group.finish();
}

fn mfg(c: &mut Criterion) {
    let model = ModelSpec::default();
    let m0 = evaluate_density(&smooth_measure(4), 64).unwrap();
    let grid = TimeGrid::new(0.0, model.horizon, 100).unwrap();
    let opts = PicardOptions {
        resolution: 64,
        tol: 1e-6,
        ..PicardOptions::default()
    };
    c.bench_function("solve_mfg/res64_steps100", |b| {
        b.iter(|| solve_mfg(black_box(&m0), &model, &grid, &InitialGuess::Zero, &opts).unwrap())
    });
}

fn sampler(c: &mut Criterion) {
    let spec = GammaSpec::new(1, 6, 5.0).unwrap();
    c.bench_function("sample_gamma_n/n1000", |b| {
        b.iter(|| sample_gamma_n(&spec, 1000, black_box(3)).unwrap())
    });
}

fn characteristics(c: &mut Criterion) {
    let potential = CouplingPotential(
        Kernel::cosine(1, &[(Mode::new1(1), 0.8), (Mode::new1(2), 0.4)]).unwrap(),
    );
    let grid = TimeGrid::new(0.0, 0.2, 10).unwrap();
    let mut group = c.benchmark_group("integrate_flow");
    group.sample_size(10);
    for order in [4usize, 8] {
        let opts = DriftOptions {
            pairs: 8,
            ..DriftOptions::default()
        };
        let drift = build_drift(&potential, None, Hamiltonian::default(), 1, order, &opts).unwrap();
        let m0 = smooth_measure(4).with_order(order).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(order), &m0, |b, m0| {
            b.iter(|| integrate_flow(black_box(m0), &drift, &grid, true).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, spectral, mfg, sampler, characteristics);
criterion_main!(benches);
