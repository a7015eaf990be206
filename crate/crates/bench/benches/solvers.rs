//! Criterion benchmarks for the subproblem solvers and the full
//! alternating loop.

use criterion::{criterion_group, criterion_main, Criterion};
use ndarray::Array2;

use dtsync_core::alternating::{self, SolveOptions};
use dtsync_core::model::{generate_channels, ScenarioConfig};
use dtsync_core::offloading::solve_offloading;
use dtsync_core::power::solve_power_control;
use dtsync_core::scheduling::{round_robin_schedule, solve_scheduling};
use dtsync_core::single_device::solve_single_device;

fn bench_scheduling(c: &mut Criterion) {
    let cfg = ScenarioConfig::paper_default(10, 10);
    let ch = generate_channels(&cfg, 1);
    let t = Array2::from_shape_fn((10, 10), |(n, k)| {
        1e-3 * (1.0 + ((n * 31 + k * 7) % 17) as f64) * ch.h[[n, k]].max(1e-14) / 1e-14
    });
    c.bench_function("scheduling_10x10", |b| {
        b.iter(|| solve_scheduling(std::hint::black_box(&t), &cfg).unwrap())
    });
}

fn bench_offloading(c: &mut Criterion) {
    let cfg = ScenarioConfig::paper_default(10, 10);
    let ch = generate_channels(&cfg, 1);
    let x = round_robin_schedule(&cfg).unwrap();
    let p = Array2::from_shape_fn((10, 10), |(_, k)| cfg.max_power_w[k]);
    c.bench_function("offloading_lp_10x10", |b| {
        b.iter(|| solve_offloading(std::hint::black_box(&x), &p, &cfg, &ch).unwrap())
    });
}

fn bench_power(c: &mut Criterion) {
    let cfg = ScenarioConfig::paper_default(6, 6);
    let ch = generate_channels(&cfg, 1);
    let x = round_robin_schedule(&cfg).unwrap();
    let p = Array2::from_shape_fn((6, 6), |(_, k)| cfg.max_power_w[k]);
    let (d, _, _) = solve_offloading(&x, &p, &cfg, &ch).unwrap();
    c.bench_function("power_sca_6x6", |b| {
        b.iter(|| solve_power_control(std::hint::black_box(&x), &d, &cfg, &ch, None).unwrap())
    });
}

fn bench_alternating(c: &mut Criterion) {
    let cfg = ScenarioConfig::paper_default(10, 10);
    let ch = generate_channels(&cfg, 1);
    let opts = SolveOptions::default();
    let mut group = c.benchmark_group("alternating");
    group.sample_size(10);
    group.bench_function("full_10x10", |b| {
        b.iter(|| alternating::solve(std::hint::black_box(&cfg), &ch, &opts).unwrap())
    });
    group.finish();
}

fn bench_single_device(c: &mut Criterion) {
    let mut cfg = ScenarioConfig::paper_default(1, 10);
    cfg.regularity_fraction = vec![0.25];
    let ch = generate_channels(&cfg, 1);
    c.bench_function("single_device_n10", |b| {
        b.iter(|| solve_single_device(std::hint::black_box(&cfg), &ch).unwrap())
    });
}

criterion_group!(
    benches,
    bench_scheduling,
    bench_offloading,
    bench_power,
    bench_alternating,
    bench_single_device
);
criterion_main!(benches);
