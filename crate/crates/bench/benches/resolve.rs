//! Full-tree resolution over layered synthetic registries.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use vulngraph_bench::layered_graph;
use vulngraph_core::resolve::{resolve_tree_with, ResolveLimits};
use vulngraph_core::semver::Version;

fn resolve_tree(c: &mut Criterion) {
    let mut group = c.benchmark_group("resolve_tree");
    for (layers, per_layer) in [(3, 20), (5, 40), (7, 60)] {
        let graph = layered_graph(layers, per_layer, 11);
        let root = format!("b{}x0", layers - 1);
        let version = Version::parse("1.3.0").unwrap();
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{layers}x{per_layer}")),
            &graph,
            |b, graph| {
                b.iter(|| {
                    let tree = resolve_tree_with(
                        black_box(graph),
                        black_box(&root),
                        &version,
                        ResolveLimits::default(),
                        false,
                    )
                    .unwrap();
                    black_box(tree.nodes().len())
                })
            },
        );
    }
    group.finish();
}

criterion_group!(benches, resolve_tree);
criterion_main!(benches);
