use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ratcensor_bench::{chain, game, uniform_multi};
use ratcensor_core::chain::simulate_horizon;
use ratcensor_core::countermeasures::win_probability;
use ratcensor_core::game::{expected_utilities, verify_ne_subgame, StrategyProfile};

fn exact_utilities(c: &mut Criterion) {
    let mut group = c.benchmark_group("expected_utilities");
    for n in [3, 4, 5] {
        let spec = game(n, 10);
        let profile = StrategyProfile::truthful(&spec);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| expected_utilities(black_box(&spec), black_box(&profile)).unwrap())
        });
    }
    group.finish();
}

fn ne_verification(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify_ne_subgame");
    group.sample_size(10);
    for n in [3, 4, 5] {
        let spec = game(n, 10);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| verify_ne_subgame(black_box(&spec)).unwrap())
        });
    }
    group.finish();
}

fn horizon(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_horizon");
    for blocks in [10_000u64, 100_000] {
        let (config, regime) = chain(8, blocks);
        group.bench_with_input(BenchmarkId::from_parameter(blocks), &blocks, |b, _| {
            b.iter(|| simulate_horizon(black_box(&config), black_box(&regime), 2).unwrap())
        });
    }
    group.finish();
}

fn multi_contract(c: &mut Criterion) {
    let mut group = c.benchmark_group("win_probability");
    for n in [4, 8, 12] {
        let spec = uniform_multi(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| win_probability(black_box(&spec)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, exact_utilities, ne_verification, horizon, multi_contract);
criterion_main!(benches);
