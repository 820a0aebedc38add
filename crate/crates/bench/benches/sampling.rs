use bigjump_bench::symmetric;
use bigjump_core::Streams;
use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use std::hint::black_box;

fn noise(c: &mut Criterion) {
    let law = symmetric(1.5);
    let mut g = c.benchmark_group("noise");
    g.throughput(Throughput::Elements(10_000));
    g.bench_function("sample_10k", |b| {
        let mut rng = Streams::new(1).stream(0);
        b.iter(|| black_box(law.sample(&mut rng, 10_000)))
    });
    g.bench_function("sample_big_10k", |b| {
        let mut rng = Streams::new(1).stream(1);
        b.iter(|| {
            let mut s = 0.0;
            for _ in 0..10_000 {
                s += law.sample_big(&mut rng, 100.0);
            }
            black_box(s)
        })
    });
    g.finish();
}

criterion_group!(benches, noise);
criterion_main!(benches);
