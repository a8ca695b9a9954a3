//! Shared fixtures for the benchmark suite.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sympflow::sympnet::SympNetConfig;
use sympflow::{Batch, Dataset, Fnn, IntegratorConfig, SampleBox, SympNet, System};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Pendulum flow-map pairs at the production sample count.
pub fn pendulum_batch(n: usize) -> Batch {
    let domain = SampleBox::new(
        vec![-std::f64::consts::SQRT_2, -std::f64::consts::FRAC_PI_2],
        vec![std::f64::consts::SQRT_2, std::f64::consts::FRAC_PI_2],
    )
    .unwrap();
    let integ = IntegratorConfig::default();
    Dataset::sample_box(System::Pendulum, &domain, n, 0.1, &integ, 1)
        .unwrap()
        .batch()
        .clone()
}

pub fn production_sympnet() -> SympNet {
    SympNet::new(&SympNetConfig::new(1, 0.1, 8, 5), &mut rng(2)).unwrap()
}

pub fn production_fnn() -> Fnn {
    Fnn::baseline(1, &mut rng(3)).unwrap()
}
