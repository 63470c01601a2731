//! Vulnerability propagation over layered synthetic graphs.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use vulngraph_bench::layered_graph;
use vulngraph_core::propagate::{
    ecosystem_propagation_stats, propagate_all, propagation_paths,
};
use vulngraph_core::resolve::ResolveLimits;

fn single_advisory(c: &mut Criterion) {
    let graph = layered_graph(5, 30, 23);
    c.bench_function("propagation_paths_single", |b| {
        b.iter(|| {
            black_box(
                propagation_paths(
                    black_box(&graph),
                    "CVE-2021-2000",
                    ResolveLimits::default(),
                )
                .unwrap(),
            )
        })
    });
}

fn all_advisories(c: &mut Criterion) {
    let graph = layered_graph(4, 24, 37);
    c.bench_function("propagate_all_with_stats", |b| {
        b.iter(|| {
            let results = propagate_all(black_box(&graph), ResolveLimits::default());
            black_box(ecosystem_propagation_stats(&graph, &results))
        })
    });
}

criterion_group!(benches, single_advisory, all_advisories);
criterion_main!(benches);
