//! Sweep throughput on a single worker versus every available core.
//! Build with `--no-default-features` to time the purely sequential path.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pillar_lens::optimize::{sweep_k4, SimContext};
use pillar_lens::par;

fn bench_sweep(c: &mut Criterion) {
    let ctx = SimContext {
        n: 256,
        ..SimContext::default()
    };
    let grid: Vec<f64> = (0..8).map(|i| 0.1 * i as f64).collect();
    let mut group = c.benchmark_group("sweep_k4");
    group.sample_size(10);
    group.bench_function("one_worker", |b| {
        b.iter(|| par::with_workers(1, || sweep_k4(1.2, 0.0, black_box(&grid), &ctx).unwrap()))
    });
    let all = par::available_workers();
    group.bench_function(format!("{all}_workers"), |b| {
        b.iter(|| par::with_workers(all, || sweep_k4(1.2, 0.0, black_box(&grid), &ctx).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, bench_sweep);
criterion_main!(benches);
