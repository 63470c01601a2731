//! Dependency tree resolution under Cargo's conventions: depth-first
//! expansion where every included declaration selects the greatest
//! satisfying version of its target, memoized per (library, version) so
//! cycles and diamonds become `shared` leaves.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::KnowledgeGraph;
use crate::ingest::{DependencyDecl, DependencyKind, VersionRecord};
use crate::semver::{max_satisfying, Version};

#[derive(Debug, Error)]
pub enum ResolveError {
    #[error("no library named `{name}` in the graph")]
    UnknownLibrary { name: String },
    #[error("library `{name}` has no version {version}")]
    UnknownVersion { name: String, version: Version },
}

/// Exploration caps. Resolution reports `truncated` instead of failing when
/// either cap is reached; zero is treated as one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolveLimits {
    /// Most nodes allowed on a single root-to-leaf path.
    pub max_nodes_per_path: usize,
    /// Most nodes allowed in the whole tree.
    pub max_total_nodes: usize,
}

impl Default for ResolveLimits {
    fn default() -> Self {
        ResolveLimits {
            max_nodes_per_path: 100,
            max_total_nodes: 1_000_000,
        }
    }
}

/// Feature state of one selected version: which of its features are enabled
/// and which of its optional dependencies those features switch on. Built
/// from the declaring edge, then closed over the version's feature graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleContext {
    enabled_features: BTreeSet<String>,
    activated_deps: BTreeSet<String>,
    included_kinds: Vec<DependencyKind>,
}

impl RuleContext {
    /// Context for a version pulled in by an edge: seed with the edge's
    /// `default_features` flag and requested feature list, then close.
    ///
    /// Feature entries may name another feature, a dependency (optional
    /// dependencies expose an implicit feature of their own name),
    /// `dep:NAME`, `NAME/FEAT` (activates NAME), or `NAME?/FEAT` (weak:
    /// never activates NAME by itself).
    pub fn for_edge(target: &VersionRecord, default_features: bool, requested: &[String]) -> Self {
        let mut ctx = RuleContext {
            enabled_features: BTreeSet::new(),
            activated_deps: BTreeSet::new(),
            included_kinds: vec![DependencyKind::Normal],
        };
        let mut queue: Vec<&str> = Vec::new();
        if default_features {
            queue.push("default");
        }
        queue.extend(requested.iter().map(String::as_str));
        while let Some(entry) = queue.pop() {
            if let Some(dep_name) = entry.strip_prefix("dep:") {
                ctx.activated_deps.insert(dep_name.to_string());
            } else if entry.contains("?/") {
                // Weak reference: forwards a feature only if the dependency
                // is activated elsewhere.
            } else if let Some((dep_name, _feature)) = entry.split_once('/') {
                ctx.activated_deps.insert(dep_name.to_string());
            } else {
                if let Some(implied) = target.features.get(entry) {
                    if ctx.enabled_features.insert(entry.to_string()) {
                        queue.extend(implied.iter().map(String::as_str));
                    }
                }
                if target
                    .dependencies
                    .iter()
                    .any(|d| d.optional && d.target_name == entry)
                {
                    ctx.activated_deps.insert(entry.to_string());
                }
            }
        }
        ctx
    }

    /// Context for the resolution root: its default feature set.
    pub fn for_root(root: &VersionRecord) -> Self {
        RuleContext::for_edge(root, true, &[])
    }

    pub fn enabled_features(&self) -> &BTreeSet<String> {
        &self.enabled_features
    }

    /// Whether an optional dependency of this version is switched on.
    pub fn activates(&self, dependency: &str) -> bool {
        self.activated_deps.contains(dependency)
    }

    /// Dependency kinds that take part in resolution.
    pub fn included_kinds(&self) -> &[DependencyKind] {
        &self.included_kinds
    }
}

/// Whether a declaration contributes an edge to the resolved tree: dev and
/// build dependencies never do, optional ones only when the context
/// activates them.
pub fn include_dependency(decl: &DependencyDecl, ctx: &RuleContext) -> bool {
    if !ctx.included_kinds.contains(&decl.kind) {
        return false;
    }
    !(decl.optional && !ctx.activates(&decl.target_name))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    /// Selected and fully expanded here.
    Resolved,
    /// Selected, but already expanded elsewhere in this tree; a leaf.
    Shared,
    /// No version of the target satisfies the requirement; a leaf without a
    /// version.
    Unresolvable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedNode {
    pub name: String,
    /// Absent only on unresolvable leaves.
    pub version: Option<Version>,
    /// Absent only on the root; always smaller than the node's own index.
    pub parent: Option<usize>,
    /// Text of the requirement that selected this node; absent on the root.
    pub requirement: Option<String>,
    pub depth: usize,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedTree {
    nodes: Vec<ResolvedNode>,
    truncated: bool,
}

impl ResolvedTree {
    /// All nodes in discovery order; index 0 is the root and every parent
    /// index precedes its children.
    pub fn nodes(&self) -> &[ResolvedNode] {
        &self.nodes
    }

    pub fn root(&self) -> &ResolvedNode {
        &self.nodes[0]
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// Every (name, version) pair selected anywhere in the tree, root
    /// included, shared leaves deduplicated.
    pub fn selected_versions(&self) -> BTreeSet<(String, Version)> {
        self.nodes
            .iter()
            .filter_map(|n| n.version.clone().map(|v| (n.name.clone(), v)))
            .collect()
    }

    /// Whether some node selected exactly this (name, version).
    pub fn contains(&self, name: &str, version: &Version) -> bool {
        self.nodes
            .iter()
            .any(|n| n.name == name && n.version.as_ref() == Some(version))
    }
}

/// Resolve the dependency tree of `name@version`, excluding yanked versions
/// from selection (except through exact pins).
pub fn resolve_tree(
    graph: &KnowledgeGraph,
    name: &str,
    version: &Version,
    limits: ResolveLimits,
) -> Result<ResolvedTree, ResolveError> {
    resolve_tree_with(graph, name, version, limits, false)
}

/// As [`resolve_tree`], with yanked versions admitted as candidates when
/// `allow_yanked` is set.
pub fn resolve_tree_with(
    graph: &KnowledgeGraph,
    name: &str,
    version: &Version,
    limits: ResolveLimits,
    allow_yanked: bool,
) -> Result<ResolvedTree, ResolveError> {
    let max_path = limits.max_nodes_per_path.max(1);
    let max_total = limits.max_total_nodes.max(1);

    let root_lib = graph
        .library_index(name)
        .ok_or_else(|| ResolveError::UnknownLibrary {
            name: name.to_string(),
        })?;
    let root_vid =
        graph
            .version_index(root_lib, version)
            .ok_or_else(|| ResolveError::UnknownVersion {
                name: name.to_string(),
                version: version.clone(),
            })?;

    struct Frame<'g> {
        node: usize,
        ctx: RuleContext,
        decls: std::vec::IntoIter<(&'g DependencyDecl, u32)>,
    }

    let mut nodes = vec![ResolvedNode {
        name: graph.library(root_lib).name.clone(),
        version: Some(version.clone()),
        parent: None,
        requirement: None,
        depth: 0,
        kind: NodeKind::Resolved,
    }];
    let mut truncated = false;
    let mut expanded: HashSet<u32> = HashSet::new();
    expanded.insert(root_vid);
    let mut stack = vec![Frame {
        node: 0,
        ctx: RuleContext::for_root(graph.version_record(root_vid)),
        decls: graph
            .dependencies_of(root_vid)
            .collect::<Vec<_>>()
            .into_iter(),
    }];

    loop {
        let (decl, target_lib) = {
            let Some(frame) = stack.last_mut() else { break };
            match frame.decls.next() {
                Some(edge) => edge,
                None => {
                    stack.pop();
                    continue;
                }
            }
        };
        let frame = stack.last().expect("frame outlives its edge");
        if !include_dependency(decl, &frame.ctx) {
            continue;
        }
        let parent = frame.node;
        let depth = nodes[parent].depth + 1;
        if depth + 1 > max_path {
            truncated = true;
            continue;
        }
        if nodes.len() >= max_total {
            truncated = true;
            break;
        }

        let name = graph.library(target_lib).name.clone();
        let requirement = Some(decl.requirement.source_text().to_string());
        let selected =
            max_satisfying(graph.library_versions(target_lib), &decl.requirement, allow_yanked)
                .cloned();
        match selected {
            None => nodes.push(ResolvedNode {
                name,
                version: None,
                parent: Some(parent),
                requirement,
                depth,
                kind: NodeKind::Unresolvable,
            }),
            Some(chosen) => {
                let child_vid = graph
                    .version_index(target_lib, &chosen)
                    .expect("selected version is a registry version");
                let first_visit = expanded.insert(child_vid);
                let index = nodes.len();
                nodes.push(ResolvedNode {
                    name,
                    version: Some(chosen),
                    parent: Some(parent),
                    requirement,
                    depth,
                    kind: if first_visit {
                        NodeKind::Resolved
                    } else {
                        NodeKind::Shared
                    },
                });
                if first_visit {
                    stack.push(Frame {
                        node: index,
                        ctx: RuleContext::for_edge(
                            graph.version_record(child_vid),
                            decl.default_features,
                            &decl.features,
                        ),
                        decls: graph
                            .dependencies_of(child_vid)
                            .collect::<Vec<_>>()
                            .into_iter(),
                    });
                }
            }
        }
    }

    Ok(ResolvedTree { nodes, truncated })
}

/// Re-derive every structural invariant of a tree from the graph and
/// requirement primitives. Empty result means the tree is sound: parent
/// indices topological, depths consecutive, every selection satisfying and
/// maximal, shared leaves expanded exactly once elsewhere.
pub fn tree_violations(
    graph: &KnowledgeGraph,
    tree: &ResolvedTree,
    allow_yanked: bool,
) -> Vec<String> {
    let mut problems = Vec::new();
    let nodes = tree.nodes();
    if nodes.is_empty() {
        return vec!["tree has no root".to_string()];
    }
    if nodes[0].parent.is_some() || nodes[0].depth != 0 || nodes[0].requirement.is_some() {
        problems.push("root carries parent, depth, or requirement".to_string());
    }

    let mut expanded_pairs: HashSet<(&str, &Version)> = HashSet::new();
    for (index, node) in nodes.iter().enumerate() {
        if index > 0 {
            let Some(parent) = node.parent else {
                problems.push(format!("node {index}: missing parent"));
                continue;
            };
            if parent >= index {
                problems.push(format!("node {index}: parent {parent} does not precede it"));
                continue;
            }
            if node.depth != nodes[parent].depth + 1 {
                problems.push(format!("node {index}: depth is not parent depth + 1"));
            }
            if node.requirement.is_none() {
                problems.push(format!("node {index}: missing selecting requirement"));
            }
        }

        let library = match graph.library_index(&node.name) {
            Some(lib) => lib,
            None => {
                problems.push(format!("node {index}: unknown library `{}`", node.name));
                continue;
            }
        };
        let requirement = node
            .requirement
            .as_deref()
            .map(crate::semver::Requirement::parse)
            .transpose()
            .unwrap_or_else(|e| {
                problems.push(format!("node {index}: stored requirement unparseable: {e}"));
                None
            });

        match node.kind {
            NodeKind::Unresolvable => {
                if node.version.is_some() {
                    problems.push(format!("node {index}: unresolvable leaf has a version"));
                }
                if let Some(req) = &requirement {
                    if max_satisfying(graph.library_versions(library), req, allow_yanked).is_some()
                    {
                        problems.push(format!(
                            "node {index}: marked unresolvable but `{req}` is satisfiable"
                        ));
                    }
                }
            }
            NodeKind::Resolved | NodeKind::Shared => {
                let Some(version) = &node.version else {
                    problems.push(format!("node {index}: resolved node lacks a version"));
                    continue;
                };
                if graph.version_index(library, version).is_none() {
                    problems.push(format!(
                        "node {index}: {}@{version} is not a registry version",
                        node.name
                    ));
                }
                if let Some(req) = &requirement {
                    if !req.matches(version) {
                        problems.push(format!(
                            "node {index}: {version} does not satisfy `{req}`"
                        ));
                    }
                    let exact_pin = req.pins_exactly(version);
                    for (candidate, yanked) in graph.library_versions(library) {
                        let eligible = !yanked || allow_yanked || exact_pin;
                        if eligible && req.matches(candidate) && candidate > version {
                            problems.push(format!(
                                "node {index}: {candidate} satisfies `{req}` and exceeds {version}"
                            ));
                        }
                    }
                }
                if node.kind == NodeKind::Resolved {
                    if !expanded_pairs.insert((node.name.as_str(), version)) {
                        problems.push(format!(
                            "node {index}: {}@{version} expanded twice",
                            node.name
                        ));
                    }
                } else if index > 0 && !expanded_pairs.contains(&(node.name.as_str(), version)) {
                    problems.push(format!(
                        "node {index}: shared leaf {}@{version} never expanded",
                        node.name
                    ));
                }
            }
        }
    }
    problems
}

fn is_false(flag: &bool) -> bool {
    !*flag
}

#[derive(Serialize)]
struct JsonNode<'a> {
    name: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    version: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    requirement: Option<&'a str>,
    #[serde(skip_serializing_if = "is_false")]
    shared: bool,
    #[serde(skip_serializing_if = "is_false")]
    unresolvable: bool,
    children: Vec<JsonNode<'a>>,
}

#[derive(Serialize)]
struct JsonFlatNode<'a> {
    name: &'a str,
    version: Option<String>,
    parent: Option<usize>,
    requirement: Option<&'a str>,
    depth: usize,
    kind: NodeKind,
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    #[serde(flatten)]
    root: JsonNode<'a>,
    nodes: Vec<JsonFlatNode<'a>>,
    truncated: bool,
}

/// Serialize a tree to its canonical JSON bytes: the nested
/// `{name, version, children}` form at the top level, a flat `nodes` array,
/// and the `truncated` flag. Byte-identical for identical trees; nesting
/// depth equals tree depth.
pub fn tree_to_json(tree: &ResolvedTree) -> Vec<u8> {
    let nodes = tree.nodes();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (index, node) in nodes.iter().enumerate().skip(1) {
        children[node.parent.expect("non-root has parent")].push(index);
    }

    fn nested<'a>(
        index: usize,
        nodes: &'a [ResolvedNode],
        children: &[Vec<usize>],
    ) -> JsonNode<'a> {
        let node = &nodes[index];
        JsonNode {
            name: &node.name,
            version: node.version.as_ref().map(Version::to_string),
            requirement: node.requirement.as_deref(),
            shared: node.kind == NodeKind::Shared,
            unresolvable: node.kind == NodeKind::Unresolvable,
            children: children[index]
                .iter()
                .map(|&child| nested(child, nodes, children))
                .collect(),
        }
    }

    let document = JsonDocument {
        root: nested(0, nodes, &children),
        nodes: nodes
            .iter()
            .map(|node| JsonFlatNode {
                name: &node.name,
                version: node.version.as_ref().map(Version::to_string),
                parent: node.parent,
                requirement: node.requirement.as_deref(),
                depth: node.depth,
                kind: node.kind,
            })
            .collect(),
        truncated: tree.truncated,
    };
    serde_json::to_vec(&document).expect("tree serializes")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionMismatch {
    pub name: String,
    pub tree_version: Version,
    pub lock_version: Version,
}

/// Differences between a resolved tree and a lockfile's pinned set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LockfileDiff {
    pub in_tree_only: Vec<(String, Version)>,
    pub in_lock_only: Vec<(String, Version)>,
    pub version_mismatch: Vec<VersionMismatch>,
}

impl LockfileDiff {
    pub fn is_clean(&self) -> bool {
        self.in_tree_only.is_empty()
            && self.in_lock_only.is_empty()
            && self.version_mismatch.is_empty()
    }
}

/// The bucket within which two versions count as the same installation slot:
/// distinct majors (or minors below 1.0.0) coexist, so they are compared
/// separately.
fn compatibility_bucket(version: &Version) -> (u64, u64, u64) {
    let (major, minor, patch) = version.core_triple();
    if major > 0 {
        (major, 0, 0)
    } else if minor > 0 {
        (0, minor, 0)
    } else {
        (0, 0, patch)
    }
}

/// Compare the versions a tree selected against lockfile pins. Entries are
/// bucketed by (name, compatible-major) so multi-major duplicates pair up
/// with their own bucket; within a bucket, differing versions become
/// mismatches, leftovers fall to the one-sided sets.
pub fn verify_against_lockfile(tree: &ResolvedTree, lock: &[(String, Version)]) -> LockfileDiff {
    type Buckets = BTreeMap<(String, (u64, u64, u64)), BTreeSet<Version>>;
    let mut tree_side: Buckets = BTreeMap::new();
    for (name, version) in tree.selected_versions() {
        let bucket = compatibility_bucket(&version);
        tree_side.entry((name, bucket)).or_default().insert(version);
    }
    let mut lock_side: Buckets = BTreeMap::new();
    for (name, version) in lock {
        let bucket = compatibility_bucket(version);
        lock_side
            .entry((name.clone(), bucket))
            .or_default()
            .insert(version.clone());
    }

    let mut diff = LockfileDiff::default();
    let keys: BTreeSet<_> = tree_side.keys().chain(lock_side.keys()).cloned().collect();
    for key in keys {
        let tree_versions = tree_side.remove(&key).unwrap_or_default();
        let lock_versions = lock_side.remove(&key).unwrap_or_default();
        let tree_rest: Vec<&Version> = tree_versions.difference(&lock_versions).collect();
        let lock_rest: Vec<&Version> = lock_versions.difference(&tree_versions).collect();
        let paired = tree_rest.len().min(lock_rest.len());
        for i in 0..paired {
            diff.version_mismatch.push(VersionMismatch {
                name: key.0.clone(),
                tree_version: tree_rest[i].clone(),
                lock_version: lock_rest[i].clone(),
            });
        }
        for version in &tree_rest[paired..] {
            diff.in_tree_only.push((key.0.clone(), (*version).clone()));
        }
        for version in &lock_rest[paired..] {
            diff.in_lock_only.push((key.0.clone(), (*version).clone()));
        }
    }
    diff
}
