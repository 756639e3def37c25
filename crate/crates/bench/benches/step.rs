use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use modelh_bench::forced;
use std::hint::black_box;

fn step(c: &mut Criterion) {
    let mut g = c.benchmark_group("step");
    for n in [16usize, 32, 64] {
        let (it, z) = forced(n).unwrap();
        g.bench_function(BenchmarkId::new("imex_step", n), |b| b.iter(|| black_box(it.step(&z).unwrap())));
        g.bench_function(BenchmarkId::new("energy_report", n), |b| b.iter(|| black_box(it.energy_report(&z))));
    }
    g.finish();
}

criterion_group!(benches, step);
criterion_main!(benches);
