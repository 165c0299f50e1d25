//! Sequential vs rayon-parallel seed×mode sweep.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use dopt_core::detengine::Strategy;
use dopt_core::heuristics::sweep_with;
use dopt_core::instance::{generate_random, normalize_to_zero_lower};

fn bench_sweep(c: &mut Criterion) {
    let inst = generate_random(48, 5, 0.6, 3).expect("generation");
    let (norm, _, _) = normalize_to_zero_lower(&inst);

    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(sweep_with(&norm, Strategy::Sm, false).unwrap().len()))
    });
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(sweep_with(&norm, Strategy::Sm, true).unwrap().len()))
    });
    group.finish();
}

criterion_group!(benches, bench_sweep);
criterion_main!(benches);
