use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use invset::config::RunConfig;
use invset::par::{with_workers, workers};
use invset::pipeline::{fit_model, prune_samples, sample};
use invset::pruning::prune_exact;

fn config(name: &str) -> RunConfig {
    RunConfig::from_path(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)).unwrap()
}

fn pools() -> Vec<(&'static str, usize)> {
    vec![("sequential", 1), ("parallel", workers())]
}

fn bench_collect(c: &mut Criterion) {
    let cfg = config("example1.json");
    let mut g = c.benchmark_group("collect_ex1");
    g.sample_size(10);
    for (label, n) in pools() {
        g.bench_with_input(BenchmarkId::from_parameter(label), &n, |b, &n| {
            b.iter(|| with_workers(n, || black_box(sample(&cfg).unwrap())))
        });
    }
    g.finish();
}

fn bench_prune(c: &mut Criterion) {
    let cfg = config("example1.json");
    let (samples, _) = sample(&cfg).unwrap();
    let mut g = c.benchmark_group("prune_exact_ex1");
    g.sample_size(10);
    for (label, n) in pools() {
        g.bench_with_input(BenchmarkId::from_parameter(label), &n, |b, &n| {
            b.iter(|| with_workers(n, || black_box(prune_exact(&samples, 1e-9).unwrap())))
        });
    }
    g.finish();
}

fn bench_fit(c: &mut Criterion) {
    let mut cfg = config("example2.json");
    cfg.fit.m_candidates = vec![10];
    cfg.fit.restarts = 8;
    let (samples, _) = sample(&cfg).unwrap();
    let (pruned, _) = prune_samples(&cfg, &samples).unwrap();
    let mut g = c.benchmark_group("fit_ex2");
    g.sample_size(10);
    for (label, n) in pools() {
        g.bench_with_input(BenchmarkId::from_parameter(label), &n, |b, &n| {
            b.iter(|| with_workers(n, || black_box(fit_model(&cfg, &pruned).unwrap())))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_collect, bench_prune, bench_fit);
criterion_main!(benches);
