use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nof1_bench::relaxed_fixture;
use nof1_core::estimate::tau_hat;
use nof1_core::gformula::{theta_dp, GKernels, StartState};
use nof1_core::scm::{simulate, Regime};
use nof1_core::Schedule;

fn theta(c: &mut Criterion) {
    let kernels = GKernels::from_scm(&relaxed_fixture(), 0);
    let mut g = c.benchmark_group("theta_dp");
    for k in [48usize, 480, 4_800] {
        g.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| b.iter(|| theta_dp(&kernels, black_box(k), 1, StartState { y: 0, l: 0 })));
    }
    g.finish();
}

fn simulation(c: &mut Criterion) {
    let scm = relaxed_fixture();
    let z = Regime::Natural(Schedule::blocks(6, 6).expect("valid"));
    let mut g = c.benchmark_group("simulate");
    for t in [48usize, 4_800] {
        g.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| b.iter(|| simulate(&scm, 0, &z, t, black_box(9))));
    }
    g.finish();
}

fn estimator(c: &mut Criterion) {
    let tr = simulate(&relaxed_fixture(), 0, &Regime::Natural(Schedule::blocks(6, 6).expect("valid")), 4_800, 3).expect("simulates");
    c.bench_function("tau_hat/4800", |b| b.iter(|| tau_hat(black_box(&tr))));
}

criterion_group!(benches, theta, simulation, estimator);
criterion_main!(benches);
