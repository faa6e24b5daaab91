use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use precedent::bundles::Variant;
use precedent::models::{featurize_all, train, FeatureSpec, TrainConfig};
use precedent::oracle::{exact_entropies, SyntheticSpec};
use precedent::pipeline::{make_bundles, synthetic_ingested, synthetic_run_config};
use precedent::stats::{paired_permutation_test, PairedLosses};
use precedent::Exec;

const STRATEGIES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn featurize(c: &mut Criterion) {
    let ing =
        synthetic_ingested(&SyntheticSpec::argument_favoring(0), 20_000, Exec::Parallel).unwrap();
    let (_, bundles) = make_bundles(&ing, &synthetic_run_config("bench".into())).unwrap();
    let halsbury = &bundles[&Variant::Halsbury];
    let spec = FeatureSpec::default();
    let mut group = c.benchmark_group("featurize");
    for (name, exec) in STRATEGIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| featurize_all(black_box(halsbury), &spec, exec))
        });
    }
    group.finish();
}

fn training(c: &mut Criterion) {
    let ing =
        synthetic_ingested(&SyntheticSpec::argument_favoring(1), 20_000, Exec::Parallel).unwrap();
    let (_, bundles) = make_bundles(&ing, &synthetic_run_config("bench".into())).unwrap();
    let spec = FeatureSpec::default();
    let xs = featurize_all(&bundles[&Variant::Halsbury], &spec, Exec::Parallel);
    let rows: Vec<_> = xs
        .iter()
        .zip(&ing.subcorpus)
        .map(|(x, c)| (x, &c.outcome))
        .collect();
    let config = TrainConfig {
        epochs: 20,
        early_stopping: false,
        ..TrainConfig::default()
    };
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| train(&spec, 2, black_box(&rows), &[], &config, exec).unwrap())
        });
    }
    group.finish();
}

fn permutation(c: &mut Criterion) {
    let n = 1000;
    let a: Vec<f64> = (0..n).map(|i| ((i * 7919) % 101) as f64 / 50.0).collect();
    let b: Vec<f64> = (0..n).map(|i| ((i * 104_729) % 97) as f64 / 50.0).collect();
    let pairs = PairedLosses::unlabelled(a, b).unwrap();
    let mut group = c.benchmark_group("permutation_test");
    for (name, exec) in STRATEGIES {
        group.bench_function(BenchmarkId::from_parameter(name), |bch| {
            bch.iter(|| paired_permutation_test(black_box(&pairs), 10_000, 0, exec).unwrap())
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let spec = SyntheticSpec::argument_favoring(0);
    let mut group = c.benchmark_group("exact_entropies");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exact_entropies(black_box(&spec), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, featurize, training, permutation, oracle);
criterion_main!(benches);
