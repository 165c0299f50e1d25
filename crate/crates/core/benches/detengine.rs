//! Per-strategy swap pricing cost on a mid-size instance, in the access
//! pattern of the local search (inner `j` loop under a fixed `i`).

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use dopt_core::detengine::{EngineState, Strategy};
use dopt_core::heuristics::{leverage_scores, round_int, select_independent_rows};
use dopt_core::instance::{generate_with_dims, normalize_to_zero_lower};

fn bench_swap_eval(c: &mut Criterion) {
    let inst = generate_with_dims(120, 30, 60, 7, 0.6, 3).expect("generation");
    let (norm, _, _) = normalize_to_zero_lower(&inst);
    let seed = select_independent_rows(&norm).expect("full rank");
    let sv = leverage_scores(&norm);
    let start = round_int(&sv, &seed, norm.s(), norm.u());

    // A fixed scan: a handful of i's, a ring of j's under each.
    let mut pairs = Vec::new();
    for bi in 0..6 {
        let i = (bi * 17) % norm.n();
        for bj in 0..10 {
            let j = (bj * 11 + 3) % norm.n();
            if i != j && start.x[i] < norm.u()[i] && start.x[j] > 0 {
                pairs.push((i, j));
            }
        }
    }

    let mut group = c.benchmark_group("swap_eval");
    group.sample_size(20);
    for strategy in Strategy::ALL {
        let mut engine = EngineState::init(&norm, &start, strategy).expect("nonsingular start");
        group.bench_with_input(
            BenchmarkId::from_parameter(strategy),
            &pairs,
            |b, pairs| {
                b.iter(|| {
                    let mut acc = 0.0;
                    for &(i, j) in pairs {
                        acc += black_box(engine.eval(i, j).ldet_new.max(-1e18));
                    }
                    acc
                })
            },
        );
    }
    group.finish();
}

criterion_group!(benches, bench_swap_eval);
criterion_main!(benches);
