use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use std::hint::black_box;

use zsrank::baselines::{train_bpr, train_mf};
use zsrank::factors::{init_factors, InitMode, InitSpec};
use zsrank::listwise::{pair_gradient, ListwiseTrainer, TrainConfig, DEFAULT_EPS};
use zsrank::Scale;
use zsrank_bench::synthetic_ratings;

fn gradient(c: &mut Criterion) {
    let u = [0.4, 0.3, 0.2, 0.5, 0.1, 0.3, 0.2, 0.4, 0.1, 0.2];
    let v = [0.2, 0.1, 0.5, 0.3, 0.4, 0.1, 0.3, 0.2, 0.2, 0.1];
    c.bench_function("pair_gradient/d10", |b| {
        b.iter(|| pair_gradient(black_box(&u), black_box(&v), DEFAULT_EPS).unwrap())
    });
}

fn zeroshot(c: &mut Criterion) {
    let mut group = c.benchmark_group("zeroshot");
    let init = init_factors(943, 1682, 10, Scale::MOVIELENS, &InitSpec { seed: 1, mode: InitMode::UniformCapped }).unwrap();
    group.throughput(Throughput::Elements(10_000));
    group.bench_function("10k_steps/943x1682_d10", |b| {
        b.iter_batched(
            || ListwiseTrainer::new(init.clone(), 1e-3, DEFAULT_EPS).unwrap(),
            |mut t| {
                for s in 0..10_000usize {
                    t.step(s * 7919 % 943, s * 104_729 % 1682).unwrap();
                }
                t
            },
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

fn baselines(c: &mut Criterion) {
    let train = synthetic_ratings(500, 800, 8);
    let mut group = c.benchmark_group("baselines");
    group.sample_size(20);
    group.throughput(Throughput::Elements(train.len() as u64));
    group.bench_function("mf_epoch/500x800", |b| {
        b.iter(|| train_mf(&train, &TrainConfig::new(0.01, 1, 10, 3)).unwrap())
    });
    group.bench_function("bpr_50k/500x800", |b| {
        b.iter(|| train_bpr(&train, &TrainConfig::new(0.01, 50_000, 10, 3)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, gradient, zeroshot, baselines);
criterion_main!(benches);
