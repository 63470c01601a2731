//! The dependency–vulnerability knowledge graph: library, library_version,
//! and cve nodes joined by has, version_depends, library_affects, and
//! version_affects edges. Immutable once built; adjacency is stored both
//! ways for version_depends and version_affects so propagation can walk
//! against the edge direction.

use std::collections::HashMap;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Advisory, DependencyDecl, LibraryRecord, RegistrySnapshot, VersionRecord};
use crate::semver::Version;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cannot write `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("export failed: {0}")]
    Csv(#[from] csv::Error),
}

/// Counts per node and edge kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    #[serde(rename = "library")]
    pub library_nodes: usize,
    #[serde(rename = "library_version")]
    pub library_version_nodes: usize,
    #[serde(rename = "cve")]
    pub cve_nodes: usize,
    #[serde(rename = "has")]
    pub has_edges: usize,
    #[serde(rename = "library_affects")]
    pub library_affects_edges: usize,
    #[serde(rename = "version_affects")]
    pub version_affects_edges: usize,
    #[serde(rename = "version_depends")]
    pub version_depends_edges: usize,
}

/// A dependency declaration whose target library is not in the snapshot.
/// The edge is dropped; the declaration stays visible on the version record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DanglingDependency {
    pub library: String,
    pub version: Version,
    pub target_name: String,
}

/// What could not be wired up during graph construction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    /// Advisories whose package_name is absent from the snapshot; their cve
    /// nodes exist but are isolated.
    pub advisories_without_package: Vec<String>,
    pub dangling_dependencies: Vec<DanglingDependency>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct DependsEdge {
    /// Index into the source version's `dependencies` list.
    decl: u32,
    target_library: u32,
}

/// The assembled graph. Libraries are indexed by position in name order;
/// versions get one global contiguous id space grouped by owning library;
/// advisories are indexed in CVE-id order.
#[derive(Debug)]
pub struct KnowledgeGraph {
    libraries: Vec<LibraryRecord>,
    advisories: Vec<Advisory>,
    library_by_name: HashMap<String, u32>,
    advisory_by_value: HashMap<String, u32>,
    /// Version-id range of library i is version_offsets[i]..version_offsets[i+1].
    version_offsets: Vec<u32>,
    version_owner: Vec<u32>,
    /// Outgoing version_depends edges of version v live at
    /// edge_offsets[v]..edge_offsets[v+1] in `depends_edges`.
    edge_offsets: Vec<u32>,
    depends_edges: Vec<DependsEdge>,
    /// Reverse version_depends: source version ids per target library, one
    /// entry per edge, in source order.
    rdep_offsets: Vec<u32>,
    rdep_edges: Vec<u32>,
    /// Per advisory: the library_affects target, when the package exists.
    library_affects: Vec<Option<u32>>,
    /// Per advisory: affected version ids, ascending.
    version_affects: Vec<Vec<u32>>,
    /// Reverse version_affects: advisory indices per affected version.
    affects_in: HashMap<u32, Vec<u32>>,
}

/// Materialize the graph from a validated snapshot and advisory list.
///
/// Advisories are assumed unique by CVE id (the ingest loaders enforce it).
pub fn build_graph(
    snapshot: RegistrySnapshot,
    advisories: Vec<Advisory>,
) -> (KnowledgeGraph, BuildReport) {
    KnowledgeGraph::build(snapshot, advisories)
}

/// Exact node and edge counts of a built graph.
pub fn graph_stats(graph: &KnowledgeGraph) -> GraphStats {
    graph.stats()
}

impl KnowledgeGraph {
    pub fn build(snapshot: RegistrySnapshot, mut advisories: Vec<Advisory>) -> (Self, BuildReport) {
        advisories.sort_by(|a, b| a.value.cmp(&b.value));
        let libraries = snapshot.libraries;
        let mut report = BuildReport::default();

        let library_by_name: HashMap<String, u32> = libraries
            .iter()
            .enumerate()
            .map(|(i, l)| (l.name.clone(), i as u32))
            .collect();

        let mut version_offsets = Vec::with_capacity(libraries.len() + 1);
        let mut version_owner = Vec::new();
        version_offsets.push(0u32);
        for (i, lib) in libraries.iter().enumerate() {
            version_owner.extend(std::iter::repeat(i as u32).take(lib.versions.len()));
            version_offsets.push(version_owner.len() as u32);
        }
        let total_versions = version_owner.len();

        let mut edge_offsets = Vec::with_capacity(total_versions + 1);
        let mut depends_edges: Vec<DependsEdge> = Vec::new();
        let mut rdep_counts = vec![0u32; libraries.len()];
        edge_offsets.push(0u32);
        for lib in &libraries {
            for version in &lib.versions {
                for (decl_idx, decl) in version.dependencies.iter().enumerate() {
                    match library_by_name.get(&decl.target_name) {
                        Some(&target_library) => {
                            depends_edges.push(DependsEdge {
                                decl: decl_idx as u32,
                                target_library,
                            });
                            rdep_counts[target_library as usize] += 1;
                        }
                        None => report.dangling_dependencies.push(DanglingDependency {
                            library: lib.name.clone(),
                            version: version.num.clone(),
                            target_name: decl.target_name.clone(),
                        }),
                    }
                }
                edge_offsets.push(depends_edges.len() as u32);
            }
        }

        let mut rdep_offsets = vec![0u32; libraries.len() + 1];
        for (i, count) in rdep_counts.iter().enumerate() {
            rdep_offsets[i + 1] = rdep_offsets[i] + count;
        }
        let mut rdep_edges = vec![0u32; depends_edges.len()];
        let mut fill = rdep_offsets.clone();
        for v in 0..total_versions {
            let span = edge_offsets[v] as usize..edge_offsets[v + 1] as usize;
            for edge in &depends_edges[span] {
                let slot = &mut fill[edge.target_library as usize];
                rdep_edges[*slot as usize] = v as u32;
                *slot += 1;
            }
        }

        let advisory_by_value: HashMap<String, u32> = advisories
            .iter()
            .enumerate()
            .map(|(i, a)| (a.value.clone(), i as u32))
            .collect();
        let mut library_affects = Vec::with_capacity(advisories.len());
        let mut version_affects = Vec::with_capacity(advisories.len());
        let mut affects_in: HashMap<u32, Vec<u32>> = HashMap::new();
        for (a_idx, advisory) in advisories.iter().enumerate() {
            match library_by_name.get(&advisory.package_name) {
                Some(&lib) => {
                    library_affects.push(Some(lib));
                    let base = version_offsets[lib as usize];
                    let mut affected = Vec::new();
                    for (local, version) in libraries[lib as usize].versions.iter().enumerate() {
                        if advisory.vulnerable_version_range.matches(&version.num) {
                            let vid = base + local as u32;
                            affected.push(vid);
                            affects_in.entry(vid).or_default().push(a_idx as u32);
                        }
                    }
                    version_affects.push(affected);
                }
                None => {
                    log::warn!(
                        "advisory {} names unknown package `{}`; its cve node is isolated",
                        advisory.value,
                        advisory.package_name
                    );
                    report.advisories_without_package.push(advisory.value.clone());
                    library_affects.push(None);
                    version_affects.push(Vec::new());
                }
            }
        }

        let graph = KnowledgeGraph {
            libraries,
            advisories,
            library_by_name,
            advisory_by_value,
            version_offsets,
            version_owner,
            edge_offsets,
            depends_edges,
            rdep_offsets,
            rdep_edges,
            library_affects,
            version_affects,
            affects_in,
        };
        (graph, report)
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            library_nodes: self.libraries.len(),
            library_version_nodes: self.version_owner.len(),
            cve_nodes: self.advisories.len(),
            has_edges: self.version_owner.len(),
            library_affects_edges: self.library_affects.iter().flatten().count(),
            version_affects_edges: self.version_affects.iter().map(Vec::len).sum(),
            version_depends_edges: self.depends_edges.len(),
        }
    }

    // ==== Node access ====

    pub fn libraries(&self) -> &[LibraryRecord] {
        &self.libraries
    }

    pub fn advisories(&self) -> &[Advisory] {
        &self.advisories
    }

    pub fn library(&self, library: u32) -> &LibraryRecord {
        &self.libraries[library as usize]
    }

    pub fn advisory(&self, advisory: u32) -> &Advisory {
        &self.advisories[advisory as usize]
    }

    pub fn library_index(&self, name: &str) -> Option<u32> {
        self.library_by_name.get(name).copied()
    }

    pub fn advisory_index(&self, cve: &str) -> Option<u32> {
        self.advisory_by_value.get(cve).copied()
    }

    /// Global version-id range owned by a library.
    pub fn version_ids(&self, library: u32) -> Range<u32> {
        self.version_offsets[library as usize]..self.version_offsets[library as usize + 1]
    }

    pub fn version_owner(&self, version: u32) -> u32 {
        self.version_owner[version as usize]
    }

    pub fn version_record(&self, version: u32) -> &VersionRecord {
        let owner = self.version_owner[version as usize];
        let local = version - self.version_offsets[owner as usize];
        &self.libraries[owner as usize].versions[local as usize]
    }

    pub fn version_index(&self, library: u32, version: &Version) -> Option<u32> {
        let base = self.version_offsets[library as usize];
        self.libraries[library as usize]
            .versions
            .iter()
            .position(|vr| vr.num == *version)
            .map(|local| base + local as u32)
    }

    /// `(num, yanked)` of every version of a library, for requirement
    /// matching.
    pub fn library_versions(&self, library: u32) -> impl Iterator<Item = (&Version, bool)> {
        self.libraries[library as usize]
            .versions
            .iter()
            .map(|vr| (&vr.num, vr.yanked))
    }

    // ==== Edge access ====

    /// Outgoing version_depends edges: each declaration of the version that
    /// targets a library present in the snapshot.
    pub fn dependencies_of(
        &self,
        version: u32,
    ) -> impl Iterator<Item = (&DependencyDecl, u32)> {
        let record = self.version_record(version);
        let span = self.edge_offsets[version as usize] as usize
            ..self.edge_offsets[version as usize + 1] as usize;
        self.depends_edges[span]
            .iter()
            .map(move |e| (&record.dependencies[e.decl as usize], e.target_library))
    }

    /// Reverse version_depends: version ids declaring a dependency on this
    /// library, one entry per edge (a version declaring it twice appears
    /// twice).
    pub fn dependents_of(&self, library: u32) -> &[u32] {
        let span = self.rdep_offsets[library as usize] as usize
            ..self.rdep_offsets[library as usize + 1] as usize;
        &self.rdep_edges[span]
    }

    /// version_affects targets of an advisory, ascending.
    pub fn affected_version_ids(&self, advisory: u32) -> &[u32] {
        &self.version_affects[advisory as usize]
    }

    /// library_affects target of an advisory, absent for isolated cve nodes.
    pub fn affected_library(&self, advisory: u32) -> Option<u32> {
        self.library_affects[advisory as usize]
    }

    /// Reverse version_affects: advisories whose range covers this version.
    pub fn advisories_affecting(&self, version: u32) -> &[u32] {
        self.affects_in
            .get(&version)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    /// Exported node id of a version.
    pub fn version_node_id(&self, version: u32) -> String {
        let owner = self.version_owner(version);
        format!(
            "version:{}@{}",
            self.libraries[owner as usize].name,
            self.version_record(version).num
        )
    }

    /// Full structural check: endpoint typing, forward/reverse agreement,
    /// and re-derivation of version_affects from the advisory ranges.
    /// Returns every violation found; an empty list means the graph is sound.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();

        for (i, lib) in self.libraries.iter().enumerate() {
            let ids = self.version_ids(i as u32);
            if ids.len() != lib.versions.len() {
                problems.push(format!("library `{}`: version range length mismatch", lib.name));
            }
            for vid in ids {
                if self.version_owner(vid) != i as u32 {
                    problems.push(format!("version id {vid}: owner mismatch"));
                }
            }
        }

        let mut forward_by_target: HashMap<u32, Vec<u32>> = HashMap::new();
        for vid in 0..self.version_owner.len() as u32 {
            let record = self.version_record(vid);
            let span =
                self.edge_offsets[vid as usize] as usize..self.edge_offsets[vid as usize + 1] as usize;
            for edge in &self.depends_edges[span] {
                let decl = match record.dependencies.get(edge.decl as usize) {
                    Some(d) => d,
                    None => {
                        problems.push(format!("version id {vid}: edge points at missing declaration"));
                        continue;
                    }
                };
                let target = &self.libraries[edge.target_library as usize];
                if decl.target_name != target.name {
                    problems.push(format!(
                        "version id {vid}: declaration targets `{}` but edge targets `{}`",
                        decl.target_name, target.name
                    ));
                }
                forward_by_target
                    .entry(edge.target_library)
                    .or_default()
                    .push(vid);
            }
        }
        for lib in 0..self.libraries.len() as u32 {
            let reverse = self.dependents_of(lib);
            let forward = forward_by_target.remove(&lib).unwrap_or_default();
            if reverse != forward.as_slice() {
                problems.push(format!(
                    "library `{}`: reverse adjacency disagrees with forward edges",
                    self.libraries[lib as usize].name
                ));
            }
        }

        for (a_idx, advisory) in self.advisories.iter().enumerate() {
            let affected = &self.version_affects[a_idx];
            match self.library_affects[a_idx] {
                Some(lib) => {
                    if self.libraries[lib as usize].name != advisory.package_name {
                        problems.push(format!(
                            "{}: library_affects targets `{}`, package_name is `{}`",
                            advisory.value,
                            self.libraries[lib as usize].name,
                            advisory.package_name
                        ));
                    }
                    // version_affects ⇔ range match, both directions.
                    let expected: Vec<u32> = self
                        .version_ids(lib)
                        .filter(|&vid| {
                            advisory
                                .vulnerable_version_range
                                .matches(&self.version_record(vid).num)
                        })
                        .collect();
                    if *affected != expected {
                        problems.push(format!(
                            "{}: version_affects set disagrees with range re-derivation",
                            advisory.value
                        ));
                    }
                    for &vid in affected {
                        if !self.advisories_affecting(vid).contains(&(a_idx as u32)) {
                            problems.push(format!(
                                "{}: reverse affects missing for version id {vid}",
                                advisory.value
                            ));
                        }
                    }
                }
                None => {
                    if !affected.is_empty() {
                        problems.push(format!(
                            "{}: isolated cve node carries version_affects edges",
                            advisory.value
                        ));
                    }
                }
            }
        }
        for (&vid, advisories) in &self.affects_in {
            for &a in advisories {
                if !self.version_affects[a as usize].contains(&vid) {
                    problems.push(format!(
                        "version id {vid}: reverse affects names advisory {a} without a forward edge"
                    ));
                }
            }
        }

        problems
    }
}

/// Write `nodes.csv` and `edges.csv` under `out_dir`: RFC-4180, header row,
/// properties as a JSON column, rows fully sorted. Byte-identical for
/// identical graphs.
pub fn export_graph(graph: &KnowledgeGraph, out_dir: impl AsRef<Path>) -> Result<(), GraphError> {
    let out_dir = out_dir.as_ref();

    let mut nodes: Vec<[String; 3]> = Vec::new();
    for lib in graph.libraries() {
        let mut props = serde_json::to_value(lib).expect("record serializes");
        props.as_object_mut().expect("record is an object").remove("versions");
        nodes.push([
            format!("library:{}", lib.name),
            "library".to_string(),
            props.to_string(),
        ]);
        for version in &lib.versions {
            let props = serde_json::json!({
                "num": version.num.to_string(),
                "yanked": version.yanked,
            });
            nodes.push([
                format!("version:{}@{}", lib.name, version.num),
                "library_version".to_string(),
                props.to_string(),
            ]);
        }
    }
    for advisory in graph.advisories() {
        let props = serde_json::to_value(advisory).expect("advisory serializes");
        nodes.push([
            format!("cve:{}", advisory.value),
            "cve".to_string(),
            props.to_string(),
        ]);
    }
    nodes.sort();

    let mut edges: Vec<[String; 4]> = Vec::new();
    for lib in graph.libraries() {
        for version in &lib.versions {
            edges.push([
                format!("library:{}", lib.name),
                format!("version:{}@{}", lib.name, version.num),
                "has".to_string(),
                "{}".to_string(),
            ]);
        }
    }
    for vid in 0..graph.version_owner.len() as u32 {
        let src = graph.version_node_id(vid);
        for (decl, target) in graph.dependencies_of(vid) {
            let props = serde_json::json!({
                "kind": decl.kind.to_string(),
                "optional": decl.optional,
                "default_features": decl.default_features,
                "features": decl.features,
                "requirement": decl.requirement.source_text(),
            });
            edges.push([
                src.clone(),
                format!("library:{}", graph.library(target).name),
                "version_depends".to_string(),
                props.to_string(),
            ]);
        }
    }
    for (a_idx, advisory) in graph.advisories().iter().enumerate() {
        let src = format!("cve:{}", advisory.value);
        if let Some(lib) = graph.affected_library(a_idx as u32) {
            edges.push([
                src.clone(),
                format!("library:{}", graph.library(lib).name),
                "library_affects".to_string(),
                "{}".to_string(),
            ]);
        }
        for &vid in graph.affected_version_ids(a_idx as u32) {
            edges.push([
                src.clone(),
                graph.version_node_id(vid),
                "version_affects".to_string(),
                "{}".to_string(),
            ]);
        }
    }
    edges.sort();

    write_csv(&out_dir.join("nodes.csv"), &["id", "kind", "properties"], nodes.iter())?;
    write_csv(
        &out_dir.join("edges.csv"),
        &["src", "dst", "kind", "properties"],
        edges.iter(),
    )?;
    Ok(())
}

fn write_csv<'a, const N: usize>(
    path: &Path,
    header: &[&str; N],
    rows: impl Iterator<Item = &'a [String; N]>,
) -> Result<(), GraphError> {
    let file = std::fs::File::create(path).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row.iter())?;
    }
    writer.flush().map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfix::{advisory, dep, library};

    fn three_library_fixture() -> (KnowledgeGraph, BuildReport) {
        // 3 libraries, 7 versions, 2 advisories covering 3 versions total.
        let mut a = library("apple", &["0.1.0", "0.2.0", "1.0.0"]);
        let b = library("berry", &["1.0.0", "1.1.0"]);
        let mut c = library("cherry", &["0.3.0", "0.3.1"]);
        a.versions[2].dependencies.push(dep("berry", "^1.0"));
        c.versions[1].dependencies.push(dep("apple", "^0.2"));
        let snapshot = RegistrySnapshot::new(vec![a, b, c]);
        let advisories = vec![
            advisory("CVE-2021-1000", "apple", "<0.2.0"),
            advisory("CVE-2021-2000", "berry", "<=1.1.0"),
        ];
        build_graph(snapshot, advisories)
    }

    #[test]
    fn three_library_fixture_counts() {
        let (graph, report) = three_library_fixture();
        let stats = graph.stats();
        assert_eq!(stats.library_nodes, 3);
        assert_eq!(stats.library_version_nodes, 7);
        assert_eq!(stats.cve_nodes, 2);
        assert_eq!(stats.has_edges, 7);
        assert_eq!(stats.library_affects_edges, 2);
        assert_eq!(stats.version_affects_edges, 3);
        assert_eq!(stats.version_depends_edges, 2);
        assert!(report.advisories_without_package.is_empty());
        assert!(report.dangling_dependencies.is_empty());
        assert!(graph.validate().is_empty());
    }

    #[test]
    fn empty_graph_is_all_zeros() {
        let (graph, _) = build_graph(RegistrySnapshot::default(), Vec::new());
        assert_eq!(graph.stats(), GraphStats::default());
        assert!(graph.validate().is_empty());
    }

    #[test]
    fn version_affects_follows_range_membership() {
        let beef = library("beef", &["0.4.4", "0.5.0"]);
        let snapshot = RegistrySnapshot::new(vec![beef]);
        let advisories = vec![advisory("CVE-2020-36442", "beef", "<0.5.0")];
        let (graph, _) = build_graph(snapshot, advisories);

        let affected = graph.affected_version_ids(0);
        assert_eq!(affected.len(), 1);
        assert_eq!(graph.version_node_id(affected[0]), "version:beef@0.4.4");
        let v050 = graph
            .version_index(graph.library_index("beef").unwrap(), &Version::parse("0.5.0").unwrap())
            .unwrap();
        assert!(graph.advisories_affecting(v050).is_empty());
        assert!(graph.validate().is_empty());
    }

    #[test]
    fn advisory_for_unknown_package_is_isolated() {
        let snapshot = RegistrySnapshot::new(vec![library("here", &["1.0.0"])]);
        let advisories = vec![advisory("CVE-2021-3000", "gone", "<1.0.0")];
        let (graph, report) = build_graph(snapshot, advisories);
        assert_eq!(report.advisories_without_package, vec!["CVE-2021-3000"]);
        let stats = graph.stats();
        assert_eq!(stats.cve_nodes, 1);
        assert_eq!(stats.library_affects_edges, 0);
        assert_eq!(stats.version_affects_edges, 0);
        assert!(graph.validate().is_empty());
    }

    #[test]
    fn dangling_dependency_drops_edge_and_reports() {
        let mut a = library("a", &["1.0.0"]);
        a.versions[0].dependencies.push(dep("ghost", "^1.0"));
        let (graph, report) = build_graph(RegistrySnapshot::new(vec![a]), Vec::new());
        assert_eq!(graph.stats().version_depends_edges, 0);
        assert_eq!(report.dangling_dependencies.len(), 1);
        assert_eq!(report.dangling_dependencies[0].target_name, "ghost");
        assert!(graph.validate().is_empty());
    }

    #[test]
    fn reverse_adjacency_mirrors_forward() {
        let (graph, _) = three_library_fixture();
        let apple = graph.library_index("apple").unwrap();
        let dependents = graph.dependents_of(apple);
        assert_eq!(dependents.len(), 1);
        assert_eq!(graph.version_node_id(dependents[0]), "version:cherry@0.3.1");
        let berry = graph.library_index("berry").unwrap();
        assert_eq!(graph.dependents_of(berry).len(), 1);
        assert_eq!(graph.dependents_of(graph.library_index("cherry").unwrap()).len(), 0);
    }

    #[test]
    fn export_empty_graph_writes_headers_only() {
        let (graph, _) = build_graph(RegistrySnapshot::default(), Vec::new());
        let dir = tempfile::tempdir().unwrap();
        export_graph(&graph, dir.path()).unwrap();
        let nodes = std::fs::read_to_string(dir.path().join("nodes.csv")).unwrap();
        let edges = std::fs::read_to_string(dir.path().join("edges.csv")).unwrap();
        assert_eq!(nodes, "id,kind,properties\n");
        assert_eq!(edges, "src,dst,kind,properties\n");
    }

    #[test]
    fn export_single_version_library() {
        let (graph, _) = build_graph(
            RegistrySnapshot::new(vec![library("solo", &["1.0.0"])]),
            Vec::new(),
        );
        let dir = tempfile::tempdir().unwrap();
        export_graph(&graph, dir.path()).unwrap();
        let nodes = std::fs::read_to_string(dir.path().join("nodes.csv")).unwrap();
        assert_eq!(nodes.lines().count(), 3);
        let edges = std::fs::read_to_string(dir.path().join("edges.csv")).unwrap();
        let rows: Vec<&str> = edges.lines().collect();
        assert_eq!(rows.len(), 2);
        assert!(rows[1].starts_with("library:solo,version:solo@1.0.0,has,"));
    }

    #[test]
    fn export_round_trip_preserves_stats() {
        let (graph, _) = three_library_fixture();
        let dir = tempfile::tempdir().unwrap();
        export_graph(&graph, dir.path()).unwrap();

        let mut imported = GraphStats::default();
        let mut reader = csv::Reader::from_path(dir.path().join("nodes.csv")).unwrap();
        for row in reader.records() {
            match &row.unwrap()[1] {
                "library" => imported.library_nodes += 1,
                "library_version" => imported.library_version_nodes += 1,
                "cve" => imported.cve_nodes += 1,
                other => panic!("unknown node kind {other}"),
            }
        }
        let mut reader = csv::Reader::from_path(dir.path().join("edges.csv")).unwrap();
        for row in reader.records() {
            match &row.unwrap()[2] {
                "has" => imported.has_edges += 1,
                "library_affects" => imported.library_affects_edges += 1,
                "version_affects" => imported.version_affects_edges += 1,
                "version_depends" => imported.version_depends_edges += 1,
                other => panic!("unknown edge kind {other}"),
            }
        }
        assert_eq!(imported, graph.stats());
    }

    #[test]
    fn export_is_deterministic() {
        let export = || {
            let (graph, _) = three_library_fixture();
            let dir = tempfile::tempdir().unwrap();
            export_graph(&graph, dir.path()).unwrap();
            (
                std::fs::read(dir.path().join("nodes.csv")).unwrap(),
                std::fs::read(dir.path().join("edges.csv")).unwrap(),
            )
        };
        assert_eq!(export(), export());
    }

    #[test]
    fn dependency_edges_carry_declarations() {
        let (graph, _) = three_library_fixture();
        let apple = graph.library_index("apple").unwrap();
        let v100 = graph
            .version_index(apple, &Version::parse("1.0.0").unwrap())
            .unwrap();
        let deps: Vec<_> = graph.dependencies_of(v100).collect();
        assert_eq!(deps.len(), 1);
        let (decl, target) = deps[0];
        assert_eq!(decl.target_name, "berry");
        assert_eq!(decl.requirement.source_text(), "^1.0");
        assert_eq!(graph.library(target).name, "berry");
    }
}
