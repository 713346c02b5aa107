//! Parallel vs single-threaded throughput of the heavy stages.
//!
//! `single` runs inside a one-thread rayon pool, `pool` on the global pool.
//! Build with `--no-default-features` to time the sequential code path with
//! no rayon at all.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use eegfit::eval::{cross_validate, CvConfig};
use eegfit::features::{FeatureVector, NUM_FEATURES};
use eegfit::forest::{train_forest, Dataset, ForestConfig};
use eegfit::pipeline::{extract, synthesize, FeatureSettings, LabeledRecording};
use eegfit::synth::SyntheticSpec;
use std::hint::black_box;

fn corpus() -> LabeledRecording {
    let spec = SyntheticSpec {
        num_channels: 4,
        ..SyntheticSpec::alternating_epochs(33, 6.0)
    };
    synthesize(&spec, 1).unwrap()
}

fn features(rec: &LabeledRecording) -> Vec<FeatureVector> {
    extract(rec, &FeatureSettings::default(), 0).unwrap().features
}

fn single_pool() -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()
}

fn bench_extract(c: &mut Criterion) {
    let rec = corpus();
    let single = single_pool();
    let mut g = c.benchmark_group("extract");
    g.sample_size(10);
    g.bench_function("single", |b| b.iter(|| single.install(|| black_box(features(&rec)))));
    g.bench_function("pool", |b| b.iter(|| black_box(features(&rec))));
    g.finish();
}

fn bench_forest(c: &mut Criterion) {
    let rows = features(&corpus());
    let mut values = Vec::with_capacity(rows.len() * NUM_FEATURES);
    for r in &rows {
        values.extend(r.values());
    }
    let data = Dataset::new(NUM_FEATURES, values, rows.iter().map(|r| r.label.unwrap()).collect()).unwrap();
    let cfg = ForestConfig::default();
    let single = single_pool();
    let mut g = c.benchmark_group("train_forest");
    g.sample_size(10);
    g.bench_function("single", |b| {
        b.iter(|| single.install(|| black_box(train_forest(&data, &cfg, 3).unwrap())))
    });
    g.bench_function("pool", |b| b.iter(|| black_box(train_forest(&data, &cfg, 3).unwrap())));
    g.finish();
}

fn bench_cv(c: &mut Criterion) {
    let rows = features(&corpus());
    let cv = CvConfig {
        folds: 20,
        repeats: 2,
        group_by_epoch: false,
    };
    let forest = ForestConfig::default();
    let single = single_pool();
    let mut g = c.benchmark_group("cross_validate");
    g.sample_size(10);
    g.bench_function("single", |b| {
        b.iter_batched(
            || rows.clone(),
            |r| single.install(|| black_box(cross_validate(&r, &cv, &forest, 5).unwrap())),
            BatchSize::LargeInput,
        )
    });
    g.bench_function("pool", |b| {
        b.iter_batched(
            || rows.clone(),
            |r| black_box(cross_validate(&r, &cv, &forest, 5).unwrap()),
            BatchSize::LargeInput,
        )
    });
    g.finish();
}

criterion_group!(benches, bench_extract, bench_forest, bench_cv);
criterion_main!(benches);
