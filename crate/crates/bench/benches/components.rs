//! Component-level timings: raw matmul throughput, activation sweeps, one
//! integrator step, and a model Jacobian. These bound what the full
//! training epoch in `training.rs` can possibly achieve.

use criterion::{criterion_group, criterion_main, Criterion};
use ndarray::Array2;
use rand::Rng;
use std::hint::black_box;
use sympflow::{IntegratorConfig, PhaseMap, System};
use sympflow_bench::{production_fnn, production_sympnet, rng};

fn bench_matmul(c: &mut Criterion) {
    let mut r = rng(11);
    let a = Array2::from_shape_fn((10_000, 50), |_| r.random_range(-1.0..1.0));
    let b = Array2::from_shape_fn((50, 50), |_| r.random_range(-1.0..1.0));
    // 2 * 10000 * 50 * 50 = 50 MFLOP per call.
    c.bench_function("matmul_10000x50_50x50", |bench| {
        bench.iter(|| black_box(a.dot(&b)))
    });
    let at = a.t();
    c.bench_function("matmul_50x10000_10000x50", |bench| {
        bench.iter(|| black_box(at.dot(&a)))
    });
}

fn bench_integrator_step(c: &mut Criterion) {
    let cfg = IntegratorConfig::default();
    c.bench_function("gauss4_pendulum_step", |bench| {
        bench.iter(|| sympflow::integrators::step(System::Pendulum, black_box(&[0.3, 0.7]), 0.1, &cfg))
    });
}

fn bench_jacobians(c: &mut Criterion) {
    let sn = production_sympnet();
    let fnn = production_fnn();
    let x = [0.3, 0.7];
    c.bench_function("sympnet_jacobian", |bench| {
        bench.iter(|| sn.jacobian(black_box(&x)))
    });
    c.bench_function("fnn_jacobian", |bench| {
        bench.iter(|| fnn.jacobian(black_box(&x)))
    });
}

criterion_group!(benches, bench_matmul, bench_integrator_step, bench_jacobians);
criterion_main!(benches);
