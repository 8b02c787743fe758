//! Compares the worker-pool and sequential execution paths on the two hot
//! workloads: the per-subcarrier beamforming solver and a Monte Carlo trial
//! batch. Results are bit-identical either way; only throughput differs.

use criterion::{criterion_group, criterion_main, Criterion};

use airbeam::beamforming::{wmmse_solve_with, WmmseConfig};
use airbeam::channel::{generate_channel_tensor, ArrayGeometry, MultipathSpec};
use airbeam::config::{ScenarioConfig, Scheme};
use airbeam::link::run_trials;
use airbeam::tensor::{CMat, RandomSource};
use airbeam::Execution;

fn solver(c: &mut Criterion) {
    let geom = ArrayGeometry::new(8, 8, 0.5).unwrap();
    let spec = MultipathSpec::uniform(4, 2, 1.0, 64, 16.0).unwrap();
    let mut rng = RandomSource::new(11, 0).rng();
    let h = generate_channel_tensor(&mut rng, 4, &spec, &geom).unwrap();
    let cfg = WmmseConfig {
        iterations: 10,
        noise_variance: 1.0 / 640.0,
        total_power: 1.0,
        error_covariance: CMat::zeros(64, 64),
    };
    let mut group = c.benchmark_group("wmmse_solve_k4_nt64_nc64");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| wmmse_solve_with(&h, &cfg, Execution::Parallel).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| wmmse_solve_with(&h, &cfg, Execution::Sequential).unwrap())
    });
    group.finish();
}

fn trial_batch(c: &mut Criterion) {
    let mut cfg = ScenarioConfig::baseline();
    cfg.subcarriers = 16;
    cfg.max_delay = Some(8.0);
    cfg.frames = 32;
    cfg.trials = 8;
    cfg.iterations = 5;
    let mut group = c.benchmark_group("trial_batch_of_8");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| run_trials(&cfg, Scheme::WmmseRobust, Execution::Parallel).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| run_trials(&cfg, Scheme::WmmseRobust, Execution::Sequential).unwrap())
    });
    group.finish();
}

criterion_group!(benches, solver, trial_batch);
criterion_main!(benches);
