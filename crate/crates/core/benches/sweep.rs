use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use phasefield::asymptotics::{beta_sweep_with, eps_sweep_with};
use phasefield::checks::yosida_suite;
use phasefield::config::RunConfig;
use phasefield::Exec;

fn executors() -> Vec<(&'static str, Exec)> {
    let mut v = vec![("sequential", Exec::Sequential)];
    #[cfg(feature = "parallel")]
    v.push(("parallel", Exec::Parallel));
    v
}

fn sweeps(c: &mut Criterion) {
    let mut cfg = RunConfig::default();
    cfg.params.t_final = 0.25;
    cfg.sweep_beta.ladder = vec![0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125, 0.0015625];
    let beta = cfg.beta_plan().unwrap();
    let mut eps = cfg.eps_plan().unwrap();
    eps.ladder = vec![1e-1, 5e-2, 2e-2, 1e-2];

    let mut group = c.benchmark_group("beta_sweep_8_levels");
    group.sample_size(10);
    for (name, exec) in executors() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| beta_sweep_with(black_box(&beta), exec).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("eps_sweep_4_levels");
    group.sample_size(10);
    for (name, exec) in executors() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| eps_sweep_with(black_box(&eps), exec).unwrap())
        });
    }
    group.finish();
}

fn yosida(c: &mut Criterion) {
    let mut group = c.benchmark_group("yosida_suite_15x10k");
    group.sample_size(10);
    for (name, exec) in executors() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| yosida_suite(black_box(&[1e-1, 1e-2, 1e-3]), 10_000, 7, exec))
        });
    }
    group.finish();
}

criterion_group!(benches, sweeps, yosida);
criterion_main!(benches);
