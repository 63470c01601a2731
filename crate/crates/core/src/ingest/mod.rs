//! Loading, validating, and incrementally updating registry and advisory
//! snapshots, plus lockfile parsing for verifying resolved trees.
//!
//! Feeds are newline-delimited JSON, one record per line. Incremental
//! updates hash each record's canonical JSON form so unchanged records are
//! recognized without re-validation.

mod load;
mod lockfile;
mod types;
mod update;

pub use load::{
    canonical_digest, load_advisories, load_registry, parse_advisory_feed, parse_registry_feed,
    LoadMode, LoadedAdvisories, LoadedRegistry,
};
pub use lockfile::{parse_lockfile, parse_lockfile_text};
pub use types::{
    Advisory, Changeset, DependencyDecl, DependencyKind, LibraryRecord, RegistrySnapshot,
    Severity, VersionRecord,
};
pub use update::{
    incremental_update, incremental_update_advisories, AdvisoryUpdate, RegistryUpdate,
};

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One problem found in an input file, tied to its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub line: usize,
    pub message: String,
}

/// Every problem found while loading a feed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn push(&mut self, line: usize, message: String) {
        self.issues.push(ValidationIssue { line, message });
    }

    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} issue(s)", self.issues.len())?;
        for issue in &self.issues {
            write!(f, "\n  line {}: {}", issue.line, issue.message)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("validation failed: {0}")]
    Validation(ValidationReport),
    #[error("lockfile stanza {stanza}: {reason}")]
    Lockfile { stanza: usize, reason: String },
    #[error("lockfile is not valid TOML: {0}")]
    LockfileSyntax(String),
}
