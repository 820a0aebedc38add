use bigjump_bench::ma_fixture;
use bigjump_core::{simulate_path, simulate_sparse, Streams};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn full_vs_sparse(c: &mut Criterion) {
    let spec = ma_fixture();
    let mut g = c.benchmark_group("paths");
    for n in [1_000usize, 10_000] {
        g.bench_with_input(BenchmarkId::new("full", n), &n, |b, &n| {
            let mut rng = Streams::new(2).stream(0);
            b.iter(|| black_box(simulate_path(&spec, n, 1, &mut rng, false).unwrap()))
        });
        let level = 0.05 * n as f64;
        g.bench_with_input(BenchmarkId::new("sparse", n), &n, |b, &n| {
            let mut rng = Streams::new(2).stream(1);
            b.iter(|| black_box(simulate_sparse(&spec, n, 1, level, &mut rng).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, full_vs_sparse);
criterion_main!(benches);
