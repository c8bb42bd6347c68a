//! Thread-pool throughput versus a single-thread pool for the data-parallel
//! hot paths. Built without the `parallel` feature both variants run
//! sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lenslevel::dataset::CommentRecord;
use lenslevel::learn::{cross_validate, ForestParams, ModelKind, ModelSpec, RandomForest};
use lenslevel::matrix::Matrix;
use lenslevel::synth::{generate, SynthConfig};
use lenslevel::textprep::Normalizer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(n: usize, d: usize) -> (Matrix, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();
    let y = rows
        .iter()
        .map(|r| r[0] + 0.3 * r[1] + rng.gen_range(-0.3..0.3) > 0.9)
        .collect();
    (Matrix::from_rows(&rows).unwrap(), y)
}

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    vec![
        ("parallel", rayon::ThreadPoolBuilder::new().build().unwrap()),
        (
            "sequential",
            rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap(),
        ),
    ]
}

fn bench(c: &mut Criterion) {
    let (x, y) = fixture(1000, 20);
    let comments: Vec<CommentRecord> = generate(&SynthConfig {
        n_users: 600,
        ..SynthConfig::default()
    })
    .unwrap()
    .comments;
    let normalizer = Normalizer::default();
    let forest = ForestParams {
        n_trees: 50,
        ..ForestParams::default()
    };

    let mut group = c.benchmark_group("forest_fit");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| RandomForest::fit(&x, &y, &forest, 7).unwrap()))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("cross_validate_gbc");
    group.sample_size(10);
    let spec = ModelSpec::new(ModelKind::GradientBoosting, 7);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| cross_validate(&spec, &x, &y, 10).unwrap()))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("textprep");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| normalizer.normalize_all(&comments)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
