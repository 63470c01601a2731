use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::semver::{Requirement, Version};

/// One library's registry metadata together with every published version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryRecord {
    pub id: String,
    pub name: String,
    pub created_at: String,
    pub updated_at: String,
    pub description: String,
    pub downloads: u64,
    pub recent_downloads: u64,
    pub max_version: String,
    pub max_stable_version: String,
    pub newest_version: String,
    pub versions: Vec<VersionRecord>,
}

/// One published version of a library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionRecord {
    pub num: Version,
    #[serde(default)]
    pub yanked: bool,
    /// Feature name → the features and dependencies it enables. Entries may
    /// be a feature name, a dependency name, `dep:NAME`, `NAME/FEAT`, or
    /// `NAME?/FEAT`.
    #[serde(default)]
    pub features: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub dependencies: Vec<DependencyDecl>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DependencyKind {
    Normal,
    Dev,
    Build,
}

impl fmt::Display for DependencyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DependencyKind::Normal => "normal",
            DependencyKind::Dev => "dev",
            DependencyKind::Build => "build",
        })
    }
}

fn default_true() -> bool {
    true
}

/// One dependency declaration on a version, as written in its manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencyDecl {
    pub target_name: String,
    pub requirement: Requirement,
    pub kind: DependencyKind,
    #[serde(default)]
    pub optional: bool,
    #[serde(default = "default_true")]
    pub default_features: bool,
    /// Features requested on the target library.
    #[serde(default)]
    pub features: Vec<String>,
}

/// Advisory severity, ordered from least to most severe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Low,
    Moderate,
    High,
    Critical,
}

impl Severity {
    pub const ALL: [Severity; 4] = [
        Severity::Low,
        Severity::Moderate,
        Severity::High,
        Severity::Critical,
    ];
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Low => "LOW",
            Severity::Moderate => "MODERATE",
            Severity::High => "HIGH",
            Severity::Critical => "CRITICAL",
        })
    }
}

impl FromStr for Severity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "LOW" => Ok(Severity::Low),
            "MODERATE" => Ok(Severity::Moderate),
            "HIGH" => Ok(Severity::High),
            "CRITICAL" => Ok(Severity::Critical),
            other => Err(format!(
                "unknown severity `{other}` (expected LOW, MODERATE, HIGH, or CRITICAL)"
            )),
        }
    }
}

impl Serialize for Severity {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Severity {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// One disclosed vulnerability affecting a single library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Advisory {
    pub database_id: u64,
    /// CVE identifier, `CVE-<year>-<sequence>`.
    pub value: String,
    pub severity: Severity,
    pub cvss: f64,
    pub published_at: String,
    pub updated_at: String,
    pub summary: String,
    pub vulnerable_version_range: Requirement,
    pub first_patched_version: Option<String>,
    pub ecosystem: String,
    pub package_name: String,
    #[serde(default)]
    pub cwe_ids: Option<Vec<String>>,
}

/// A validated set of library records, sorted by name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegistrySnapshot {
    pub libraries: Vec<LibraryRecord>,
}

impl RegistrySnapshot {
    pub fn new(mut libraries: Vec<LibraryRecord>) -> Self {
        libraries.sort_by(|a, b| a.name.cmp(&b.name));
        RegistrySnapshot { libraries }
    }

    pub fn library(&self, name: &str) -> Option<&LibraryRecord> {
        self.libraries
            .binary_search_by(|l| l.name.as_str().cmp(name))
            .ok()
            .map(|i| &self.libraries[i])
    }

    pub fn version_count(&self) -> usize {
        self.libraries.iter().map(|l| l.versions.len()).sum()
    }
}

/// What changed between an existing dataset and a freshly fetched feed.
/// A registry feed fills the library fields, an advisory feed the advisory
/// fields; within each feed the sets are disjoint by construction.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Changeset {
    pub added: Vec<String>,
    pub modified: Vec<String>,
    pub removed: Vec<String>,
    pub advisories_added: Vec<String>,
    pub advisories_modified: Vec<String>,
    /// Digest of the raw feed bytes the changeset was computed from.
    pub content_hash: String,
}

impl Changeset {
    /// Whether the feed introduced no change to any record.
    pub fn is_empty(&self) -> bool {
        self.added.is_empty()
            && self.modified.is_empty()
            && self.removed.is_empty()
            && self.advisories_added.is_empty()
            && self.advisories_modified.is_empty()
    }
}
