//! Vulnerability propagation: who depends, directly or transitively, on a
//! version inside an advisory's vulnerable range. Candidates come from the
//! declared reverse-dependency closure (an over-approximation); each is then
//! confirmed or excluded by actually resolving its dependency tree.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::KnowledgeGraph;
use crate::resolve::{resolve_tree, NodeKind, ResolveLimits, ResolvedTree};
use crate::semver::Version;

/// The tree resolved a version of the advisory's package, but every resolved
/// version falls outside the vulnerable range.
pub const REASON_OUTSIDE_RANGE: &str = "resolved-version-outside-range";
/// The package is declared somewhere in the tree but no version of it could
/// be resolved.
pub const REASON_UNRESOLVABLE: &str = "dependency-unresolvable";
/// No resolved path reaches the package at all (the declared edge was dev,
/// build, inactive optional, or pruned by intermediate selections).
pub const REASON_NOT_IN_TREE: &str = "library-not-in-resolved-tree";

#[derive(Debug, Error)]
pub enum PropagateError {
    #[error("no advisory `{cve}` in the graph")]
    UnknownAdvisory { cve: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessPath {
    pub library: String,
    pub version: Version,
    /// Resolved parent-child hops from the affected version down to a
    /// directly affected version.
    pub path: Vec<(String, Version)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedCandidate {
    pub library: String,
    pub version: Version,
    pub reason: String,
}

/// Everything one advisory reaches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationResult {
    pub advisory: String,
    pub package: String,
    /// Versions inside the vulnerable range, sorted.
    pub direct: Vec<(String, Version)>,
    /// Dependent versions whose resolution selects a direct version, sorted;
    /// versions that are themselves direct are not repeated here.
    pub transitively_affected: Vec<(String, Version)>,
    /// One shortest witness per transitively affected version, same order.
    pub witness_paths: Vec<WitnessPath>,
    /// Candidates whose resolution avoids the vulnerable range, with the
    /// reason, sorted.
    pub excluded_candidates: Vec<ExcludedCandidate>,
    pub truncated: bool,
}

/// Union counts across advisories, with ratios against the whole graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EcosystemStats {
    pub directly_affected_libraries: usize,
    pub directly_affected_versions: usize,
    pub propagated_libraries: usize,
    pub propagated_versions: usize,
    pub library_ratio: f64,
    pub version_ratio: f64,
}

/// The versions an advisory's range covers, as (library, version) pairs.
/// Empty (with a warning) when the advisory or its package is absent.
pub fn affected_versions(graph: &KnowledgeGraph, cve: &str) -> Vec<(String, Version)> {
    let Some(advisory) = graph.advisory_index(cve) else {
        log::warn!("advisory `{cve}` is not in the graph");
        return Vec::new();
    };
    graph
        .affected_version_ids(advisory)
        .iter()
        .map(|&vid| {
            let owner = graph.version_owner(vid);
            (
                graph.library(owner).name.clone(),
                graph.version_record(vid).num.clone(),
            )
        })
        .collect()
}

/// Global version ids of every version that declares a dependency on
/// `library`, directly or through intermediate libraries' declarations.
/// This is the unresolved candidate set: membership says a path of
/// declarations exists, not that resolution follows it.
fn candidate_version_ids(graph: &KnowledgeGraph, library: u32) -> Vec<u32> {
    let mut visited = vec![false; graph.libraries().len()];
    visited[library as usize] = true;
    let mut queue = VecDeque::from([library]);
    let mut found: BTreeSet<u32> = BTreeSet::new();
    while let Some(lib) = queue.pop_front() {
        for &vid in graph.dependents_of(lib) {
            found.insert(vid);
            let owner = graph.version_owner(vid);
            if !visited[owner as usize] {
                visited[owner as usize] = true;
                queue.push_back(owner);
            }
        }
    }
    found.into_iter().collect()
}

/// The declared reverse-dependency closure of a library, as sorted
/// (library, version) pairs. Unknown names yield the empty set.
pub fn reverse_dependents(graph: &KnowledgeGraph, library_name: &str) -> BTreeSet<(String, Version)> {
    let Some(library) = graph.library_index(library_name) else {
        return BTreeSet::new();
    };
    candidate_version_ids(graph, library)
        .into_iter()
        .map(|vid| {
            let owner = graph.version_owner(vid);
            (
                graph.library(owner).name.clone(),
                graph.version_record(vid).num.clone(),
            )
        })
        .collect()
}

/// Root-to-node chain of (name, version) pairs in a resolved tree.
fn chain_to(tree: &ResolvedTree, index: usize) -> Vec<(String, Version)> {
    let nodes = tree.nodes();
    let mut path = Vec::new();
    let mut cursor = Some(index);
    while let Some(i) = cursor {
        let node = &nodes[i];
        path.push((
            node.name.clone(),
            node.version.clone().expect("path nodes are resolved"),
        ));
        cursor = node.parent;
    }
    path.reverse();
    path
}

/// Resolve every candidate dependent of an advisory's package and split them
/// into transitively affected versions (with a shortest witness path each)
/// and excluded candidates (with the reason resolution avoided the range).
pub fn propagation_paths(
    graph: &KnowledgeGraph,
    cve: &str,
    limits: ResolveLimits,
) -> Result<PropagationResult, PropagateError> {
    let advisory_idx = graph
        .advisory_index(cve)
        .ok_or_else(|| PropagateError::UnknownAdvisory {
            cve: cve.to_string(),
        })?;
    let advisory = graph.advisory(advisory_idx);

    let direct_ids: HashSet<u32> = graph
        .affected_version_ids(advisory_idx)
        .iter()
        .copied()
        .collect();
    let mut direct: Vec<(String, Version)> = affected_versions(graph, cve);
    direct.sort();

    let mut result = PropagationResult {
        advisory: cve.to_string(),
        package: advisory.package_name.clone(),
        direct,
        transitively_affected: Vec::new(),
        witness_paths: Vec::new(),
        excluded_candidates: Vec::new(),
        truncated: false,
    };
    let Some(package_lib) = graph.affected_library(advisory_idx) else {
        return Ok(result);
    };
    let package_name = &graph.library(package_lib).name;
    let direct_versions: HashSet<&Version> = result.direct.iter().map(|(_, v)| v).collect();

    let mut affected: BTreeMap<(String, Version), Vec<(String, Version)>> = BTreeMap::new();
    let mut excluded: BTreeMap<(String, Version), &'static str> = BTreeMap::new();
    for vid in candidate_version_ids(graph, package_lib) {
        if direct_ids.contains(&vid) {
            continue;
        }
        let owner = graph.version_owner(vid);
        let name = graph.library(owner).name.clone();
        let version = graph.version_record(vid).num.clone();
        let tree = resolve_tree(graph, &name, &version, limits)
            .expect("candidate versions come from the graph");
        if tree.truncated() {
            result.truncated = true;
        }

        let mut witness: Option<Vec<(String, Version)>> = None;
        let mut package_resolved = false;
        let mut package_unresolvable = false;
        for (index, node) in tree.nodes().iter().enumerate() {
            if node.name != *package_name {
                continue;
            }
            match &node.version {
                None => package_unresolvable = true,
                Some(v) if direct_versions.contains(v) => {
                    let path = chain_to(&tree, index);
                    if witness
                        .as_ref()
                        .is_none_or(|best| (path.len(), &path) < (best.len(), best))
                    {
                        witness = Some(path);
                    }
                }
                Some(_) => package_resolved = true,
            }
        }

        match witness {
            Some(path) => {
                affected.insert((name, version), path);
            }
            None => {
                let reason = if package_resolved {
                    REASON_OUTSIDE_RANGE
                } else if package_unresolvable {
                    REASON_UNRESOLVABLE
                } else {
                    REASON_NOT_IN_TREE
                };
                excluded.insert((name, version), reason);
            }
        }
    }

    for ((library, version), path) in affected {
        result.transitively_affected.push((library.clone(), version.clone()));
        result.witness_paths.push(WitnessPath {
            library,
            version,
            path,
        });
    }
    for ((library, version), reason) in excluded {
        result.excluded_candidates.push(ExcludedCandidate {
            library,
            version,
            reason: reason.to_string(),
        });
    }
    Ok(result)
}

/// Propagation results for every advisory in the graph, in CVE-id order.
pub fn propagate_all(graph: &KnowledgeGraph, limits: ResolveLimits) -> Vec<PropagationResult> {
    graph
        .advisories()
        .iter()
        .map(|a| {
            propagation_paths(graph, &a.value, limits).expect("graph advisories are ingested")
        })
        .collect()
}

/// Union the per-advisory sets and relate them to the graph totals. A
/// version (or library) that is directly affected anywhere counts as direct
/// only; the propagated counts and ratios cover the rest.
pub fn ecosystem_propagation_stats(
    graph: &KnowledgeGraph,
    results: &[PropagationResult],
) -> EcosystemStats {
    let mut direct_versions: BTreeSet<&(String, Version)> = BTreeSet::new();
    let mut transitive_versions: BTreeSet<&(String, Version)> = BTreeSet::new();
    for result in results {
        direct_versions.extend(result.direct.iter());
        transitive_versions.extend(result.transitively_affected.iter());
    }
    transitive_versions.retain(|pair| !direct_versions.contains(pair));
    let direct_libraries: BTreeSet<&str> =
        direct_versions.iter().map(|(name, _)| name.as_str()).collect();
    let propagated_libraries: BTreeSet<&str> = transitive_versions
        .iter()
        .map(|(name, _)| name.as_str())
        .filter(|name| !direct_libraries.contains(name))
        .collect();

    let totals = graph.stats();
    let ratio = |part: usize, whole: usize| {
        if whole == 0 {
            0.0
        } else {
            part as f64 / whole as f64
        }
    };
    EcosystemStats {
        directly_affected_libraries: direct_libraries.len(),
        directly_affected_versions: direct_versions.len(),
        propagated_libraries: propagated_libraries.len(),
        propagated_versions: transitive_versions.len(),
        library_ratio: ratio(propagated_libraries.len(), totals.library_nodes),
        version_ratio: ratio(transitive_versions.len(), totals.library_version_nodes),
    }
}

/// One row of the impact ranking.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpactRow {
    pub cve: String,
    pub package: String,
    pub libraries_reached: usize,
    pub versions_reached: usize,
}

/// The `k` advisories reaching the most transitively affected versions,
/// descending, ties broken by CVE id ascending.
pub fn top_impact_table(results: &[PropagationResult], k: usize) -> Vec<ImpactRow> {
    let mut rows: Vec<ImpactRow> = results
        .iter()
        .map(|result| {
            let libraries: BTreeSet<&str> = result
                .transitively_affected
                .iter()
                .map(|(name, _)| name.as_str())
                .collect();
            ImpactRow {
                cve: result.advisory.clone(),
                package: result.package.clone(),
                libraries_reached: libraries.len(),
                versions_reached: result.transitively_affected.len(),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        b.versions_reached
            .cmp(&a.versions_reached)
            .then_with(|| a.cve.cmp(&b.cve))
    });
    rows.truncate(k);
    rows
}

/// Re-check a propagation result against the graph from primitives: direct
/// set equals the advisory's range matches, witnesses align with the
/// transitive set, every witness is a real resolved parent-child chain
/// ending in a direct version, and the transitive set stays inside the
/// declared candidate closure. Empty means sound.
pub fn propagation_violations(
    graph: &KnowledgeGraph,
    result: &PropagationResult,
    limits: ResolveLimits,
) -> Vec<String> {
    let mut problems = Vec::new();
    let expected_direct = {
        let mut pairs = affected_versions(graph, &result.advisory);
        pairs.sort();
        pairs
    };
    if result.direct != expected_direct {
        problems.push("direct set disagrees with the advisory's range matches".to_string());
    }

    if result.witness_paths.len() != result.transitively_affected.len() {
        problems.push("witness paths do not align with the transitive set".to_string());
        return problems;
    }

    let direct_set: BTreeSet<&(String, Version)> = result.direct.iter().collect();
    let candidates = reverse_dependents(graph, &result.package);
    for (pair, witness) in result
        .transitively_affected
        .iter()
        .zip(&result.witness_paths)
    {
        if direct_set.contains(pair) {
            problems.push(format!(
                "{}@{} is both direct and transitive",
                pair.0, pair.1
            ));
        }
        if !candidates.contains(pair) {
            problems.push(format!(
                "{}@{} is outside the declared dependent closure",
                pair.0, pair.1
            ));
        }
        if (witness.library.clone(), witness.version.clone()) != *pair {
            problems.push(format!("witness for {}@{} mislabeled", pair.0, pair.1));
            continue;
        }
        let path = &witness.path;
        if path.first() != Some(pair) {
            problems.push(format!("witness for {}@{} does not start at it", pair.0, pair.1));
            continue;
        }
        match path.last() {
            Some(end) if direct_set.contains(end) => {}
            _ => {
                problems.push(format!(
                    "witness for {}@{} does not end at a direct version",
                    pair.0, pair.1
                ));
                continue;
            }
        }

        let tree = match resolve_tree(graph, &pair.0, &pair.1, limits) {
            Ok(tree) => tree,
            Err(e) => {
                problems.push(format!("cannot re-resolve {}@{}: {e}", pair.0, pair.1));
                continue;
            }
        };
        let nodes = tree.nodes();
        let mut frontier = vec![0usize];
        let root = (nodes[0].name.clone(), nodes[0].version.clone().unwrap());
        if root != *pair {
            problems.push(format!("re-resolution of {}@{} has a different root", pair.0, pair.1));
            continue;
        }
        for hop in &path[1..] {
            let mut next = Vec::new();
            for (index, node) in nodes.iter().enumerate() {
                let Some(parent) = node.parent else { continue };
                if frontier.contains(&parent)
                    && node.kind != NodeKind::Unresolvable
                    && node.name == hop.0
                    && node.version.as_ref() == Some(&hop.1)
                {
                    next.push(index);
                }
            }
            frontier = next;
            if frontier.is_empty() {
                problems.push(format!(
                    "witness for {}@{} leaves the resolved tree at {}@{}",
                    pair.0, pair.1, hop.0, hop.1
                ));
                break;
            }
        }
    }
    problems
}
