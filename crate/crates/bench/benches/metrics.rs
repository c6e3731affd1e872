use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use zsrank::baselines::train_mf;
use zsrank::listwise::TrainConfig;
use zsrank::metrics::{mae_on, matthew_degree, topk_recommend};
use zsrank::orderstat::{normalization_check, DensitySpec};
use zsrank_bench::synthetic_ratings;

fn ranking(c: &mut Criterion) {
    let train = synthetic_ratings(943, 1682, 16);
    let model = train_mf(&train, &TrainConfig::new(0.01, 2, 10, 5)).unwrap();
    let seen = train.items_by_user();

    c.bench_function("topk/k10_1682_items", |b| {
        b.iter(|| topk_recommend(&model, black_box(17), 10, &seen[17]).unwrap())
    });
    c.bench_function("mae/ml100k_shape", |b| b.iter(|| mae_on(&model, &train).unwrap()));

    let mut group = c.benchmark_group("matthew");
    group.sample_size(10);
    group.bench_function("k10/943x1682", |b| b.iter(|| matthew_degree(&model, &train, 10).unwrap()));
    group.finish();
}

fn orderstat(c: &mut Criterion) {
    let f = DensitySpec::Power { alpha: 2.0, a: 0.0, b: 1.0 };
    let mut group = c.benchmark_group("orderstat");
    group.sample_size(10);
    group.bench_function("normalization/n3_1e6", |b| {
        b.iter(|| normalization_check(&f, 3, 1_000_000, 9).unwrap())
    });
    group.finish();
}

criterion_group!(benches, ranking, orderstat);
criterion_main!(benches);
