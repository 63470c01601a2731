use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::types::{Advisory, LibraryRecord, RegistrySnapshot};
use super::{IngestError, ValidationReport};
use crate::semver::Version;

/// Whether a load tolerates invalid records (collecting them in the report)
/// or refuses the whole file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadMode {
    Strict,
    Lenient,
}

/// A loaded registry feed: the valid records, a name→digest table for later
/// incremental updates, and whatever was wrong with the rest.
#[derive(Debug, Clone)]
pub struct LoadedRegistry {
    pub snapshot: RegistrySnapshot,
    pub hashes: BTreeMap<String, String>,
    pub report: ValidationReport,
}

/// A loaded advisory feed, keyed by CVE identifier in `hashes`.
#[derive(Debug, Clone)]
pub struct LoadedAdvisories {
    pub advisories: Vec<Advisory>,
    pub hashes: BTreeMap<String, String>,
    pub report: ValidationReport,
}

/// Digest of one record's canonical JSON form: keys sorted, no insignificant
/// whitespace. Two spellings of the same object share a digest.
pub fn canonical_digest(value: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(value).expect("serializing a parsed Value");
    hex_digest(canonical.as_bytes())
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub(crate) fn read_file(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Load a newline-delimited JSON registry feed.
///
/// Strict mode fails on the first report with any issue; lenient mode keeps
/// every valid record and returns the issues alongside.
pub fn load_registry(
    path: impl AsRef<Path>,
    mode: LoadMode,
) -> Result<LoadedRegistry, IngestError> {
    let raw = read_file(path.as_ref())?;
    parse_registry_feed(&raw, mode)
}

pub fn parse_registry_feed(raw: &str, mode: LoadMode) -> Result<LoadedRegistry, IngestError> {
    let mut report = ValidationReport::default();
    let mut libraries: Vec<LibraryRecord> = Vec::new();
    let mut hashes = BTreeMap::new();

    for (line_no, line) in ndjson_lines(raw) {
        let value: serde_json::Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => {
                report.push(line_no, format!("invalid JSON: {e}"));
                continue;
            }
        };
        let digest = canonical_digest(&value);
        let record: LibraryRecord = match serde_json::from_value(value) {
            Ok(r) => r,
            Err(e) => {
                report.push(line_no, format!("invalid library record: {e}"));
                continue;
            }
        };
        let issues = validate_library(&record);
        if !issues.is_empty() {
            for message in issues {
                report.push(line_no, message);
            }
            continue;
        }
        if hashes.contains_key(&record.name) {
            report.push(line_no, format!("duplicate library name `{}`", record.name));
            continue;
        }
        hashes.insert(record.name.clone(), digest);
        libraries.push(record);
    }

    if mode == LoadMode::Strict && !report.is_clean() {
        return Err(IngestError::Validation(report));
    }
    Ok(LoadedRegistry {
        snapshot: RegistrySnapshot::new(libraries),
        hashes,
        report,
    })
}

/// Load a newline-delimited JSON advisory feed. Severities are normalized to
/// upper case and every vulnerable range is parsed up front.
pub fn load_advisories(
    path: impl AsRef<Path>,
    mode: LoadMode,
) -> Result<LoadedAdvisories, IngestError> {
    let raw = read_file(path.as_ref())?;
    parse_advisory_feed(&raw, mode)
}

pub fn parse_advisory_feed(raw: &str, mode: LoadMode) -> Result<LoadedAdvisories, IngestError> {
    let mut report = ValidationReport::default();
    let mut advisories: Vec<Advisory> = Vec::new();
    let mut hashes = BTreeMap::new();

    for (line_no, line) in ndjson_lines(raw) {
        let value: serde_json::Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => {
                report.push(line_no, format!("invalid JSON: {e}"));
                continue;
            }
        };
        let digest = canonical_digest(&value);
        let advisory: Advisory = match serde_json::from_value(value) {
            Ok(a) => a,
            Err(e) => {
                report.push(line_no, format!("invalid advisory record: {e}"));
                continue;
            }
        };
        let issues = validate_advisory(&advisory);
        if !issues.is_empty() {
            for message in issues {
                report.push(line_no, message);
            }
            continue;
        }
        if hashes.contains_key(&advisory.value) {
            report.push(line_no, format!("duplicate advisory `{}`", advisory.value));
            continue;
        }
        hashes.insert(advisory.value.clone(), digest);
        advisories.push(advisory);
    }

    if mode == LoadMode::Strict && !report.is_clean() {
        return Err(IngestError::Validation(report));
    }
    Ok(LoadedAdvisories {
        advisories,
        hashes,
        report,
    })
}

/// Non-blank lines of an NDJSON document with their 1-based line numbers.
fn ndjson_lines(raw: &str) -> impl Iterator<Item = (usize, &str)> {
    raw.lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.trim()))
        .filter(|(_, line)| !line.is_empty())
}

/// Record-level checks shared by loading and incremental updates.
pub(crate) fn validate_library(record: &LibraryRecord) -> Vec<String> {
    let mut issues = Vec::new();
    if record.name.is_empty() {
        issues.push("library name is empty".to_string());
    }
    if record.versions.is_empty() {
        issues.push(format!("library `{}` has no versions", record.name));
    }

    for (field, text) in [
        ("max_version", &record.max_version),
        ("max_stable_version", &record.max_stable_version),
        ("newest_version", &record.newest_version),
    ] {
        if let Err(e) = Version::parse(text) {
            issues.push(format!("library `{}`: {field}: {e}", record.name));
        }
    }
    if let Ok(newest) = Version::parse(&record.newest_version) {
        if !record.versions.iter().any(|v| v.num == newest) {
            issues.push(format!(
                "library `{}`: newest_version {newest} is not among its versions",
                record.name
            ));
        }
    }

    let mut seen = BTreeSet::new();
    for version in &record.versions {
        if !seen.insert(&version.num) {
            issues.push(format!(
                "library `{}`: version {} declared twice",
                record.name, version.num
            ));
        }
        let features: BTreeSet<&str> = version.features.keys().map(|k| k.as_str()).collect();
        let deps: BTreeSet<&str> = version
            .dependencies
            .iter()
            .map(|d| d.target_name.as_str())
            .collect();
        for (feature, enables) in &version.features {
            for entry in enables {
                let known = if let Some(name) = entry.strip_prefix("dep:") {
                    deps.contains(name)
                } else if let Some((name, _)) = entry.split_once('/') {
                    deps.contains(name.strip_suffix('?').unwrap_or(name))
                } else {
                    features.contains(entry.as_str()) || deps.contains(entry.as_str())
                };
                if !known {
                    issues.push(format!(
                        "library `{}` version {}: feature `{feature}` enables unknown name `{entry}`",
                        record.name, version.num
                    ));
                }
            }
        }
    }
    issues
}

pub(crate) fn validate_advisory(advisory: &Advisory) -> Vec<String> {
    let mut issues = Vec::new();
    if !is_cve_id(&advisory.value) {
        issues.push(format!(
            "advisory id `{}` is not of the form CVE-<year>-<sequence>",
            advisory.value
        ));
    }
    if !(0.0..=10.0).contains(&advisory.cvss) {
        issues.push(format!(
            "advisory `{}`: cvss {} outside [0, 10]",
            advisory.value, advisory.cvss
        ));
    }
    if advisory.package_name.is_empty() {
        issues.push(format!("advisory `{}`: package_name is empty", advisory.value));
    }
    if let Some(patched) = &advisory.first_patched_version {
        if let Err(e) = Version::parse(patched) {
            issues.push(format!(
                "advisory `{}`: first_patched_version: {e}",
                advisory.value
            ));
        }
    }
    issues
}

fn is_cve_id(text: &str) -> bool {
    let Some(rest) = text.strip_prefix("CVE-") else {
        return false;
    };
    let Some((year, seq)) = rest.split_once('-') else {
        return false;
    };
    year.len() == 4
        && year.bytes().all(|b| b.is_ascii_digit())
        && !seq.is_empty()
        && seq.bytes().all(|b| b.is_ascii_digit())
}
