//! Hand-rolled record builders shared by the unit tests.

use std::collections::BTreeMap;

use crate::graph::{build_graph, KnowledgeGraph};
use crate::ingest::{
    Advisory, DependencyDecl, DependencyKind, LibraryRecord, RegistrySnapshot, VersionRecord,
};
use crate::semver::{Requirement, Version};

pub(crate) fn version(num: &str) -> VersionRecord {
    VersionRecord {
        num: Version::parse(num).unwrap(),
        yanked: false,
        features: BTreeMap::new(),
        dependencies: Vec::new(),
    }
}

pub(crate) fn library(name: &str, versions: &[&str]) -> LibraryRecord {
    let newest = versions.last().expect("at least one version");
    LibraryRecord {
        id: name.to_string(),
        name: name.to_string(),
        created_at: "2021-01-01T00:00:00".into(),
        updated_at: "2022-01-01T00:00:00".into(),
        description: String::new(),
        downloads: 100,
        recent_downloads: 10,
        max_version: newest.to_string(),
        max_stable_version: newest.to_string(),
        newest_version: newest.to_string(),
        versions: versions.iter().map(|v| version(v)).collect(),
    }
}

pub(crate) fn dep(target: &str, requirement: &str) -> DependencyDecl {
    DependencyDecl {
        target_name: target.to_string(),
        requirement: Requirement::parse(requirement).unwrap(),
        kind: DependencyKind::Normal,
        optional: false,
        default_features: true,
        features: Vec::new(),
    }
}

pub(crate) fn dep_of_kind(target: &str, requirement: &str, kind: DependencyKind) -> DependencyDecl {
    DependencyDecl {
        kind,
        ..dep(target, requirement)
    }
}

pub(crate) fn optional_dep(target: &str, requirement: &str) -> DependencyDecl {
    DependencyDecl {
        optional: true,
        ..dep(target, requirement)
    }
}

pub(crate) fn advisory(cve: &str, package: &str, range: &str) -> Advisory {
    Advisory {
        database_id: 1,
        value: cve.to_string(),
        severity: "HIGH".parse().unwrap(),
        cvss: 7.0,
        published_at: "t".into(),
        updated_at: "t".into(),
        summary: String::new(),
        vulnerable_version_range: Requirement::parse(range).unwrap(),
        first_patched_version: None,
        ecosystem: "RUST".into(),
        package_name: package.to_string(),
        cwe_ids: None,
    }
}

/// Build a graph directly from records, panicking on report noise so tests
/// that expect a clean build stay loud.
pub(crate) fn graph_of(libraries: Vec<LibraryRecord>, advisories: Vec<Advisory>) -> KnowledgeGraph {
    let (graph, report) = build_graph(RegistrySnapshot::new(libraries), advisories);
    assert!(
        report.dangling_dependencies.is_empty() && report.advisories_without_package.is_empty(),
        "unexpected build-report entries: {report:?}"
    );
    graph
}

/// Random-registry strategies for the property tests.
pub(crate) mod gen {
    use super::*;
    use proptest::prelude::*;

    pub(crate) const VERSION_POOL: [&str; 6] =
        ["0.1.0", "0.1.5", "1.0.0", "1.1.0", "1.2.3", "2.0.0"];
    pub(crate) const REQ_POOL: [&str; 8] =
        ["*", "^0.1", "^1", "^2", ">=0.1, <2", "=1.0.0", "~1.1", ">=2"];

    /// Registries of up to `max_libs` libraries named `l0..`, each with one
    /// to three versions from a fixed pool and up to three dependencies on
    /// arbitrary libraries (cycles and self-references included).
    pub(crate) fn registry(max_libs: usize) -> impl Strategy<Value = Vec<LibraryRecord>> {
        let one_version = (
            0..VERSION_POOL.len(),
            prop::collection::vec((any::<prop::sample::Index>(), 0..REQ_POOL.len()), 0..=3),
        );
        let one_lib = prop::collection::vec(one_version, 1..=3);
        prop::collection::vec(one_lib, 1..=max_libs).prop_map(|specs| {
            let count = specs.len();
            specs
                .into_iter()
                .enumerate()
                .map(|(i, versions)| {
                    let mut seen = std::collections::BTreeMap::new();
                    for (v_idx, deps) in versions {
                        seen.entry(v_idx).or_insert(deps);
                    }
                    let mut lib = library(
                        &format!("l{i}"),
                        &seen.keys().map(|&k| VERSION_POOL[k]).collect::<Vec<_>>(),
                    );
                    for (slot, (_, deps)) in seen.into_iter().enumerate() {
                        for (target, req) in deps {
                            lib.versions[slot]
                                .dependencies
                                .push(dep(&format!("l{}", target.index(count)), REQ_POOL[req]));
                        }
                    }
                    lib
                })
                .collect()
        })
    }
}
