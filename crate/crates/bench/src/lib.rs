//! Synthetic registry generation shared by the benchmarks.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use vulngraph_core::graph::{build_graph, KnowledgeGraph};
use vulngraph_core::ingest::{
    Advisory, DependencyDecl, DependencyKind, LibraryRecord, RegistrySnapshot, Severity,
    VersionRecord,
};
use vulngraph_core::semver::{Requirement, Version};

/// Layer 0 has no dependencies; each library above depends on two libraries
/// of the layer below, so trees fan out but terminate by construction.
pub fn layered_registry(layers: usize, per_layer: usize, seed: u64) -> RegistrySnapshot {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut libraries = Vec::with_capacity(layers * per_layer);
    for layer in 0..layers {
        for slot in 0..per_layer {
            let name = format!("b{layer}x{slot}");
            let versions = (0..4)
                .map(|minor| {
                    let dependencies = if layer == 0 {
                        Vec::new()
                    } else {
                        (0..2)
                            .map(|_| {
                                let target = rng.gen_range(0..per_layer);
                                decl(&format!("b{}x{target}", layer - 1), "^1")
                            })
                            .collect()
                    };
                    VersionRecord {
                        num: Version::parse(&format!("1.{minor}.0")).unwrap(),
                        yanked: false,
                        features: Default::default(),
                        dependencies,
                    }
                })
                .collect();
            libraries.push(record(&name, versions));
        }
    }
    RegistrySnapshot::new(libraries)
}

/// One advisory per third library of the bottom layer, each covering the
/// lower half of its version range.
pub fn advisories_for(per_layer: usize) -> Vec<Advisory> {
    (0..per_layer)
        .step_by(3)
        .enumerate()
        .map(|(index, slot)| Advisory {
            database_id: 40_000 + index as u64,
            value: format!("CVE-2021-{:04}", 2000 + index),
            severity: Severity::High,
            cvss: 7.5,
            published_at: "2021-05-01T00:00:00Z".to_string(),
            updated_at: "2021-05-02T00:00:00Z".to_string(),
            summary: format!("b0x{slot} mishandles crafted input"),
            vulnerable_version_range: Requirement::parse("< 1.2.0").unwrap(),
            first_patched_version: Some("1.2.0".to_string()),
            ecosystem: "RUST".to_string(),
            package_name: format!("b0x{slot}"),
            cwe_ids: Some(vec!["CWE-20".to_string()]),
        })
        .collect()
}

pub fn layered_graph(layers: usize, per_layer: usize, seed: u64) -> KnowledgeGraph {
    let (graph, report) = build_graph(layered_registry(layers, per_layer, seed), advisories_for(per_layer));
    assert!(report.dangling_dependencies.is_empty());
    graph
}

fn decl(target: &str, requirement: &str) -> DependencyDecl {
    DependencyDecl {
        target_name: target.to_string(),
        requirement: Requirement::parse(requirement).unwrap(),
        kind: DependencyKind::Normal,
        optional: false,
        default_features: true,
        features: Vec::new(),
    }
}

fn record(name: &str, versions: Vec<VersionRecord>) -> LibraryRecord {
    let newest = versions.iter().map(|v| v.num.clone()).max().unwrap().to_string();
    LibraryRecord {
        id: format!("lib-{name}"),
        name: name.to_string(),
        created_at: "2021-01-01T00:00:00Z".to_string(),
        updated_at: "2021-06-01T00:00:00Z".to_string(),
        description: format!("{name} synthetic benchmark library"),
        downloads: 10_000,
        recent_downloads: 1_000,
        max_version: newest.clone(),
        max_stable_version: newest.clone(),
        newest_version: newest,
        versions,
    }
}
