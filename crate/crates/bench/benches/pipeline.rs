use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use xcorpus_bench::{two_clouds, voiced_clip};
use xcorpus_core::audio::{preprocess, resample, PreprocessConfig};
use xcorpus_core::features::extract_features;
use xcorpus_core::learners::{train_logistic, train_mlp, ClassWeighting, MlpOptions};
use xcorpus_core::metrics::{confusion_matrix, uar};
use xcorpus_core::Preset;

fn audio(c: &mut Criterion) {
    let clip = voiced_clip(220.0, 1.5, 44_100);
    c.bench_function("resample 44.1k to 16k, 1.5 s", |b| b.iter(|| resample(black_box(&clip), 16_000).unwrap()));
    c.bench_function("preprocess 1.5 s", |b| b.iter(|| preprocess(black_box(&clip), &PreprocessConfig::default()).unwrap()));
}

fn features(c: &mut Criterion) {
    let clip = voiced_clip(180.0, 1.5, 16_000);
    c.bench_function("compact features 1.5 s", |b| b.iter(|| extract_features("u", black_box(&clip), Preset::Compact).unwrap()));
    c.bench_function("brute features 1.5 s", |b| b.iter(|| extract_features("u", black_box(&clip), Preset::Brute).unwrap()));
}

fn learners(c: &mut Criterion) {
    let (x, y) = two_clouds(320, 88);
    c.bench_function("logistic 320x88", |b| {
        b.iter(|| train_logistic(black_box(&x), &y, 1e-2, ClassWeighting::None, 1e-6, 5000).unwrap())
    });
    let opts = MlpOptions { hidden: 64, learning_rate: 1e-2, ..MlpOptions::default() };
    let mut group = c.benchmark_group("mlp");
    group.sample_size(10);
    group.bench_function("mlp h64 320x88", |b| b.iter(|| train_mlp(black_box(&x), &y, &opts, 7).unwrap()));
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let truth: Vec<usize> = (0..10_000).map(|i| i % 2).collect();
    let pred: Vec<usize> = (0..10_000).map(|i| (i / 3) % 2).collect();
    c.bench_function("confusion + uar 10k", |b| {
        b.iter(|| uar(&confusion_matrix(black_box(&truth), black_box(&pred), 2).unwrap()).unwrap())
    });
}

criterion_group!(benches, audio, features, learners, metrics);
criterion_main!(benches);
