//! Full-batch epoch costs at the production sample count (n = 10000).
//! `loss` is the forward pass alone; `loss_and_grad` is one training epoch
//! minus the (negligible) Adam update.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use sympflow::TrainableModel;
use sympflow_bench::{pendulum_batch, production_fnn, production_sympnet};

fn bench_epochs(c: &mut Criterion) {
    let batch = pendulum_batch(10_000);
    let mut sn = production_sympnet();
    let mut fnn = production_fnn();

    c.bench_function("sympnet_loss_n10000", |b| {
        b.iter(|| sn.loss(black_box(&batch), 0.0).unwrap())
    });
    c.bench_function("sympnet_epoch_n10000", |b| {
        b.iter(|| sn.loss_and_grad(black_box(&batch), 0.0).unwrap())
    });
    c.bench_function("fnn_loss_n10000", |b| {
        b.iter(|| fnn.loss(black_box(&batch), 0.0).unwrap())
    });
    c.bench_function("fnn_epoch_n10000", |b| {
        b.iter(|| fnn.loss_and_grad(black_box(&batch), 0.0).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = bench_epochs
}
criterion_main!(benches);
