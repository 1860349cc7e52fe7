//! Sequential against rayon execution for the two data-parallel workloads:
//! a ground-state sweep over ε and a positive-P ensemble.

use std::hint::black_box;

use bosonic_qpt::exec::{map_ordered, Execution};
use bosonic_qpt::model::ModelParams;
use bosonic_qpt::positive_p::{ensemble_stats, SdeConfig};
use bosonic_qpt::spectral::{adaptive_diagonalize, AdaptiveOptions};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

fn modes() -> Vec<(&'static str, Execution)> {
    let mut m = vec![("sequential", Execution::Sequential)];
    if cfg!(feature = "parallel") {
        m.push(("parallel", Execution::Parallel { workers: 0 }));
    }
    m
}

fn sweep(c: &mut Criterion) {
    let eps: Vec<f64> = (0..32).map(|i| 0.5 + i as f64 / 31.0).collect();
    let opts = AdaptiveOptions::default();
    let mut g = c.benchmark_group("sweep_32_points_L1e6");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                map_ordered(exec, &eps, |_, &e| {
                    let p = ModelParams::new(e, 1e6).unwrap();
                    adaptive_diagonalize(&p, &opts).map(|r| r.ground_energy()).ok()
                })
            })
        });
    }
    g.finish();
}

fn ensemble(c: &mut Criterion) {
    let p = ModelParams::new(0.8, 10.0).unwrap();
    let config = SdeConfig { t_final: 0.5, n_trajectories: 8192, ..SdeConfig::default() };
    let mut g = c.benchmark_group("ensemble_8192_trajectories");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| ensemble_stats(black_box(&config), &p, Complex64::new(0.0, 0.0), exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, sweep, ensemble);
criterion_main!(benches);
