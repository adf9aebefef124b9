use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use phrprobe_core::classifier::{train, TrainConfig};
use phrprobe_core::store::{decode_dump, encode_dump};
use phrprobe_core::synthetic::{correlation_contrast, gaussian_blobs, Layout};
use phrprobe_core::{correlation_sweep, pool, ReprType};

fn layout() -> Layout {
    Layout {
        hidden_dim: 64,
        num_layers: 13,
        special_tokens: true,
    }
}

fn bench_codec(c: &mut Criterion) {
    let fx = correlation_contrast(500, 100, layout(), 1);
    let bytes = encode_dump(fx.dump.header(), fx.dump.records()).unwrap();
    c.bench_function("decode_dump/1200_records", |b| {
        b.iter(|| decode_dump(black_box(&bytes)).unwrap())
    });
}

fn bench_pooling(c: &mut Criterion) {
    let fx = correlation_contrast(50, 0, layout(), 2);
    let id = fx.dump.records()[0].record_id;
    let view = fx.dump.view(id).unwrap();
    let mut group = c.benchmark_group("pool");
    for repr in ReprType::ALL {
        group.bench_function(BenchmarkId::from_parameter(repr), |b| {
            b.iter(|| pool(black_box(&view), 6, repr).unwrap())
        });
    }
    group.finish();
}

fn bench_correlation(c: &mut Criterion) {
    let mut group = c.benchmark_group("correlation_sweep");
    group.sample_size(20);
    for n in [410, 3345] {
        let fx = correlation_contrast(n - n / 8, n / 8, layout(), 3);
        group.bench_with_input(BenchmarkId::from_parameter(n), &fx, |b, fx| {
            b.iter(|| correlation_sweep(&fx.dump, &fx.items, &ReprType::ALL).unwrap())
        });
    }
    group.finish();
}

fn bench_train(c: &mut Criterion) {
    let data = gaussian_blobs(500, 128, 4.0, 4);
    let cfg = TrainConfig {
        epochs: 5,
        ..TrainConfig::default()
    };
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    group.bench_function("1000x128_5_epochs", |b| {
        b.iter(|| train(black_box(&data), &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_codec,
    bench_pooling,
    bench_correlation,
    bench_train
);
criterion_main!(benches);
