//! Data-parallel kernels on the global rayon pool against a one-thread pool.
//!
//! Build with `--no-default-features` to time the plain sequential code path
//! instead; under that build both variants run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use wpfair::sim::{power_specificity_experiment, ExperimentOptions, SimConfig};
use wpfair::{
    test_statistic, CostParams, Dataset, ErrorFn, FairnessCriterion, LinearModel, SolverOptions,
};

fn instance(n: usize, d: usize) -> (Dataset, LinearModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal));
    let a = (0..n).map(|i| i % 3 == 0).collect();
    let y = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let rho = (0..d).map(|j| 1.0 + j as f64 * 0.1).collect();
    (Dataset::new(x, a, y).unwrap(), LinearModel::new(rho, 0.5))
}

fn pools() -> [(&'static str, rayon::ThreadPool); 2] {
    [
        ("one-thread", rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("all-threads", rayon::ThreadPoolBuilder::new().build().unwrap()),
    ]
}

fn dual(c: &mut Criterion) {
    let mut group = c.benchmark_group("dual_statistic");
    group.sample_size(10);
    let crit = FairnessCriterion::accuracy_parity(ErrorFn::Squared);
    let cost = CostParams::new(1.0, 1.0);
    for n in [200, 2000] {
        let (ds, m) = instance(n, 5);
        for (name, pool) in pools() {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| pool.install(|| test_statistic(&ds, &m, &crit, cost, &SolverOptions::default(), true).unwrap()))
            });
        }
    }
    group.finish();
}

fn power(c: &mut Criterion) {
    let mut group = c.benchmark_group("power_experiment");
    group.sample_size(10);
    let grid = [SimConfig {
        n_total: 160,
        effect: 0.4,
        n_trials: 100,
        ..SimConfig::default()
    }];
    let opts = ExperimentOptions {
        n_permutations: 200,
        ..Default::default()
    };
    for (name, pool) in pools() {
        group.bench_function(name, |b| {
            b.iter(|| pool.install(|| power_specificity_experiment(&grid, &opts).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, dual, power);
criterion_main!(benches);
