use std::collections::BTreeMap;

use super::load::{canonical_digest, hex_digest, validate_advisory, validate_library};
use super::types::{Advisory, Changeset, LibraryRecord, RegistrySnapshot};
use super::{IngestError, ValidationReport};

/// A registry snapshot after applying a fresh feed.
#[derive(Debug, Clone)]
pub struct RegistryUpdate {
    pub snapshot: RegistrySnapshot,
    pub hashes: BTreeMap<String, String>,
    pub changeset: Changeset,
}

/// An advisory set after applying a fresh feed.
#[derive(Debug, Clone)]
pub struct AdvisoryUpdate {
    pub advisories: Vec<Advisory>,
    pub hashes: BTreeMap<String, String>,
    pub changeset: Changeset,
}

/// Apply a freshly fetched registry feed against the existing snapshot.
///
/// Each record's canonical-JSON digest is compared to the existing table:
/// records with an unchanged digest are carried over without re-validation,
/// so only changed records pay the parsing cost. Any invalid record aborts
/// the whole update and the old snapshot stands.
///
/// `old_hashes` must be the table produced alongside `old` (by a load or a
/// previous update): its keys are `old`'s library names.
pub fn incremental_update(
    old: &RegistrySnapshot,
    old_hashes: &BTreeMap<String, String>,
    new_raw: &str,
) -> Result<RegistryUpdate, IngestError> {
    let mut report = ValidationReport::default();
    let mut libraries: Vec<LibraryRecord> = Vec::new();
    let mut hashes: BTreeMap<String, String> = BTreeMap::new();
    let mut added = Vec::new();
    let mut modified = Vec::new();

    for (line_no, line) in ndjson_lines(new_raw) {
        let Some((name, digest, value)) = keyed_record(line, "name", line_no, &mut report) else {
            continue;
        };
        if hashes.contains_key(&name) {
            report.push(line_no, format!("duplicate library name `{name}`"));
            continue;
        }

        let unchanged = old_hashes.get(&name) == Some(&digest);
        if unchanged {
            if let Some(record) = old.library(&name) {
                hashes.insert(name, digest);
                libraries.push(record.clone());
                continue;
            }
        }

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
        if record.name != name {
            // keyed_record already read the same field; defensive only.
            report.push(line_no, "record name changed during parse".to_string());
            continue;
        }
        if old_hashes.contains_key(&name) {
            modified.push(name.clone());
        } else {
            added.push(name.clone());
        }
        hashes.insert(name, digest);
        libraries.push(record);
    }

    if !report.is_clean() {
        return Err(IngestError::Validation(report));
    }

    let removed: Vec<String> = old_hashes
        .keys()
        .filter(|name| !hashes.contains_key(*name))
        .cloned()
        .collect();
    added.sort();
    modified.sort();

    Ok(RegistryUpdate {
        snapshot: RegistrySnapshot::new(libraries),
        hashes,
        changeset: Changeset {
            added,
            modified,
            removed,
            content_hash: hex_digest(new_raw.as_bytes()),
            ..Changeset::default()
        },
    })
}

/// Apply a freshly fetched advisory feed, keyed by CVE identifier.
///
/// Withdrawn advisories (present before, absent from the feed) are dropped
/// from the dataset; the changeset reports only additions and modifications.
pub fn incremental_update_advisories(
    old: &[Advisory],
    old_hashes: &BTreeMap<String, String>,
    new_raw: &str,
) -> Result<AdvisoryUpdate, IngestError> {
    let mut report = ValidationReport::default();
    let mut advisories: Vec<Advisory> = Vec::new();
    let mut hashes: BTreeMap<String, String> = BTreeMap::new();
    let mut added = Vec::new();
    let mut modified = Vec::new();

    for (line_no, line) in ndjson_lines(new_raw) {
        let Some((id, digest, value)) = keyed_record(line, "value", line_no, &mut report) else {
            continue;
        };
        if hashes.contains_key(&id) {
            report.push(line_no, format!("duplicate advisory `{id}`"));
            continue;
        }

        let unchanged = old_hashes.get(&id) == Some(&digest);
        if unchanged {
            if let Some(advisory) = old.iter().find(|a| a.value == id) {
                hashes.insert(id, digest);
                advisories.push(advisory.clone());
                continue;
            }
        }

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
        if old_hashes.contains_key(&id) {
            modified.push(id.clone());
        } else {
            added.push(id.clone());
        }
        hashes.insert(id, digest);
        advisories.push(advisory);
    }

    if !report.is_clean() {
        return Err(IngestError::Validation(report));
    }
    added.sort();
    modified.sort();

    Ok(AdvisoryUpdate {
        advisories,
        hashes,
        changeset: Changeset {
            advisories_added: added,
            advisories_modified: modified,
            content_hash: hex_digest(new_raw.as_bytes()),
            ..Changeset::default()
        },
    })
}

/// Parse one feed line far enough to know which record it is: the value of
/// its key field plus the canonical digest of the whole line.
fn keyed_record(
    line: &str,
    key_field: &str,
    line_no: usize,
    report: &mut ValidationReport,
) -> Option<(String, String, serde_json::Value)> {
    let value: serde_json::Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => {
            report.push(line_no, format!("invalid JSON: {e}"));
            return None;
        }
    };
    let Some(key) = value.get(key_field).and_then(|v| v.as_str()) else {
        report.push(line_no, format!("record has no string `{key_field}` field"));
        return None;
    };
    let key = key.to_string();
    let digest = canonical_digest(&value);
    Some((key, digest, value))
}

fn ndjson_lines(raw: &str) -> impl Iterator<Item = (usize, &str)> {
    raw.lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.trim()))
        .filter(|(_, line)| !line.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::load::{parse_registry_feed, LoadMode};

    fn library_line(name: &str, versions: &[&str]) -> String {
        let version_objs: Vec<String> = versions
            .iter()
            .map(|v| format!(r#"{{"num":"{v}"}}"#))
            .collect();
        let newest = versions.last().unwrap();
        format!(
            r#"{{"id":"{name}","name":"{name}","created_at":"t","updated_at":"t","description":"","downloads":1,"recent_downloads":1,"max_version":"{newest}","max_stable_version":"{newest}","newest_version":"{newest}","versions":[{}]}}"#,
            version_objs.join(",")
        )
    }

    fn seed(lines: &[String]) -> (RegistrySnapshot, BTreeMap<String, String>) {
        let loaded = parse_registry_feed(&lines.join("\n"), LoadMode::Strict).unwrap();
        (loaded.snapshot, loaded.hashes)
    }

    #[test]
    fn identical_feed_yields_empty_changeset() {
        let lines = vec![library_line("a", &["1.0.0"]), library_line("b", &["0.2.0"])];
        let raw = lines.join("\n");
        let (snapshot, hashes) = seed(&lines);
        let update = incremental_update(&snapshot, &hashes, &raw).unwrap();
        assert!(update.changeset.is_empty());
        assert_eq!(update.snapshot, snapshot);
        assert_eq!(update.hashes, hashes);
        assert!(!update.changeset.content_hash.is_empty());
    }

    #[test]
    fn reordered_keys_still_count_as_unchanged() {
        let lines = vec![library_line("a", &["1.0.0"])];
        let (snapshot, hashes) = seed(&lines);
        // Same object, different spelling.
        let reordered = lines[0]
            .replacen(r#""id":"a","name":"a""#, r#""name":"a","id":"a""#, 1);
        assert_ne!(reordered, lines[0]);
        let update = incremental_update(&snapshot, &hashes, &reordered).unwrap();
        assert!(update.changeset.is_empty());
    }

    #[test]
    fn version_gain_is_a_modification() {
        let lines = vec![library_line("a", &["1.0.0"]), library_line("b", &["0.2.0"])];
        let (snapshot, hashes) = seed(&lines);
        let raw = [
            library_line("a", &["1.0.0", "1.1.0"]),
            library_line("b", &["0.2.0"]),
        ]
        .join("\n");
        let update = incremental_update(&snapshot, &hashes, &raw).unwrap();
        assert_eq!(update.changeset.modified, vec!["a"]);
        assert!(update.changeset.added.is_empty());
        assert!(update.changeset.removed.is_empty());
        assert_eq!(
            update.snapshot.library("a").unwrap().versions.len(),
            2
        );
    }

    #[test]
    fn appended_and_dropped_libraries() {
        let lines = vec![library_line("a", &["1.0.0"]), library_line("b", &["0.2.0"])];
        let (snapshot, hashes) = seed(&lines);
        let raw = [library_line("b", &["0.2.0"]), library_line("c", &["3.0.0"])].join("\n");
        let update = incremental_update(&snapshot, &hashes, &raw).unwrap();
        assert_eq!(update.changeset.added, vec!["c"]);
        assert_eq!(update.changeset.removed, vec!["a"]);
        assert!(update.changeset.modified.is_empty());
        assert!(update.snapshot.library("a").is_none());
    }

    #[test]
    fn update_is_idempotent() {
        let lines = vec![library_line("a", &["1.0.0"])];
        let (snapshot, hashes) = seed(&lines);
        let raw = [library_line("a", &["1.0.0", "2.0.0"]), library_line("z", &["0.1.0"])]
            .join("\n");
        let first = incremental_update(&snapshot, &hashes, &raw).unwrap();
        assert!(!first.changeset.is_empty());
        let second = incremental_update(&first.snapshot, &first.hashes, &raw).unwrap();
        assert!(second.changeset.is_empty());
        assert_eq!(second.snapshot, first.snapshot);
    }

    #[test]
    fn parse_failure_aborts_whole_update() {
        let lines = vec![library_line("a", &["1.0.0"])];
        let (snapshot, hashes) = seed(&lines);
        let raw = format!("{}\n{{\"name\":\"broken\"}}", library_line("a", &["1.0.0"]));
        let err = incremental_update(&snapshot, &hashes, &raw).unwrap_err();
        assert!(matches!(err, IngestError::Validation(_)));
    }

    #[test]
    fn changeset_sets_are_disjoint() {
        let lines = vec![
            library_line("keep", &["1.0.0"]),
            library_line("touch", &["1.0.0"]),
            library_line("drop", &["1.0.0"]),
        ];
        let (snapshot, hashes) = seed(&lines);
        let raw = [
            library_line("keep", &["1.0.0"]),
            library_line("touch", &["1.0.0", "1.0.1"]),
            library_line("fresh", &["0.1.0"]),
        ]
        .join("\n");
        let update = incremental_update(&snapshot, &hashes, &raw).unwrap();
        let cs = &update.changeset;
        assert_eq!(cs.added, vec!["fresh"]);
        assert_eq!(cs.modified, vec!["touch"]);
        assert_eq!(cs.removed, vec!["drop"]);
        for name in &cs.added {
            assert!(!cs.modified.contains(name) && !cs.removed.contains(name));
        }
        for name in &cs.modified {
            assert!(!cs.removed.contains(name));
        }
    }

    const CVE_A: &str = r#"{"database_id":1,"value":"CVE-2021-0001","severity":"HIGH","cvss":7.5,"published_at":"t","updated_at":"t","summary":"s","vulnerable_version_range":"<1.0.0","first_patched_version":"1.0.0","ecosystem":"RUST","package_name":"a"}"#;
    const CVE_B: &str = r#"{"database_id":2,"value":"CVE-2021-0002","severity":"LOW","cvss":2.0,"published_at":"t","updated_at":"t","summary":"s","vulnerable_version_range":"<0.5.0","first_patched_version":null,"ecosystem":"RUST","package_name":"b"}"#;

    #[test]
    fn advisory_updates_track_added_and_modified_ids() {
        let loaded =
            crate::ingest::load::parse_advisory_feed(CVE_A, LoadMode::Strict).unwrap();
        let touched = CVE_A.replace("7.5", "8.1");
        let raw = format!("{touched}\n{CVE_B}");
        let update =
            incremental_update_advisories(&loaded.advisories, &loaded.hashes, &raw).unwrap();
        assert_eq!(update.changeset.advisories_added, vec!["CVE-2021-0002"]);
        assert_eq!(update.changeset.advisories_modified, vec!["CVE-2021-0001"]);
        assert_eq!(update.advisories.len(), 2);
        let again =
            incremental_update_advisories(&update.advisories, &update.hashes, &raw).unwrap();
        assert!(again.changeset.is_empty());
    }
}
