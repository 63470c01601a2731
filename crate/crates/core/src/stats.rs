//! Descriptive statistics over the advisory set and the graph: severity and
//! CVSS distributions, weakness-class rankings, patch availability, and how
//! many libraries ship a latest version that is still inside a vulnerable
//! range.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::graph::KnowledgeGraph;
use crate::ingest::{Advisory, Severity};
use crate::semver::Version;

/// Share of advisories per severity class.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeverityDistribution {
    pub total: usize,
    /// All four classes are always present; they sum to 1 when total > 0.
    pub fractions: BTreeMap<Severity, f64>,
}

impl SeverityDistribution {
    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn fraction(&self, severity: Severity) -> f64 {
        self.fractions.get(&severity).copied().unwrap_or(0.0)
    }
}

pub fn severity_distribution(advisories: &[Advisory]) -> SeverityDistribution {
    let total = advisories.len();
    let mut counts: BTreeMap<Severity, usize> = BTreeMap::new();
    for advisory in advisories {
        *counts.entry(advisory.severity).or_insert(0) += 1;
    }
    let fractions = Severity::ALL
        .iter()
        .map(|&severity| {
            let count = counts.get(&severity).copied().unwrap_or(0);
            let fraction = if total == 0 {
                0.0
            } else {
                count as f64 / total as f64
            };
            (severity, fraction)
        })
        .collect();
    SeverityDistribution { total, fractions }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    /// Exclusive, except for the final bin which closes at 10.
    pub upper: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvssHistogram {
    pub bin_width: f64,
    /// Covers [0, 10]; empty when there are no advisories.
    pub bins: Vec<HistogramBin>,
    /// Smallest and largest nonzero score. Zero scores mean "not rated" and
    /// land in the first bin but never in min/max.
    pub min: Option<f64>,
    pub max: Option<f64>,
}

pub fn cvss_histogram(advisories: &[Advisory], bin_width: f64) -> CvssHistogram {
    assert!(bin_width > 0.0, "bin width must be positive");
    let mut histogram = CvssHistogram {
        bin_width,
        bins: Vec::new(),
        min: None,
        max: None,
    };
    if advisories.is_empty() {
        return histogram;
    }

    let mut lower = 0.0;
    while lower < 10.0 {
        histogram.bins.push(HistogramBin {
            lower,
            upper: (lower + bin_width).min(10.0),
            count: 0,
        });
        lower += bin_width;
    }
    let last = histogram.bins.len() - 1;
    for advisory in advisories {
        let score = advisory.cvss;
        if !(0.0..=10.0).contains(&score) {
            log::warn!(
                "advisory {} has out-of-range cvss {score}; skipped",
                advisory.value
            );
            continue;
        }
        let index = ((score / bin_width) as usize).min(last);
        histogram.bins[index].count += 1;
        if score > 0.0 {
            histogram.min = Some(histogram.min.map_or(score, |m: f64| m.min(score)));
            histogram.max = Some(histogram.max.map_or(score, |m: f64| m.max(score)));
        }
    }
    histogram
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CweEntry {
    pub id: String,
    pub description: String,
    pub count: usize,
}

/// Weakness classes ranked by advisory count, descending.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CweRanking {
    pub entries: Vec<CweEntry>,
}

/// Common-weakness names for the ids that actually occur in Rust advisories.
const CWE_NAMES: [(&str, &str); 24] = [
    ("CWE-20", "Improper Input Validation"),
    ("CWE-22", "Improper Limitation of a Pathname to a Restricted Directory"),
    ("CWE-77", "Improper Neutralization of Special Elements used in a Command"),
    ("CWE-78", "Improper Neutralization of Special Elements used in an OS Command"),
    ("CWE-79", "Improper Neutralization of Input During Web Page Generation"),
    ("CWE-119", "Improper Restriction of Operations within the Bounds of a Memory Buffer"),
    ("CWE-121", "Stack-based Buffer Overflow"),
    ("CWE-122", "Heap-based Buffer Overflow"),
    ("CWE-125", "Out-of-bounds Read"),
    ("CWE-134", "Use of Externally-Controlled Format String"),
    ("CWE-190", "Integer Overflow or Wraparound"),
    ("CWE-200", "Exposure of Sensitive Information to an Unauthorized Actor"),
    ("CWE-276", "Incorrect Default Permissions"),
    ("CWE-362", "Concurrent Execution using Shared Resource with Improper Synchronization"),
    ("CWE-400", "Uncontrolled Resource Consumption"),
    ("CWE-415", "Double Free"),
    ("CWE-416", "Use After Free"),
    ("CWE-476", "NULL Pointer Dereference"),
    ("CWE-502", "Deserialization of Untrusted Data"),
    ("CWE-674", "Uncontrolled Recursion"),
    ("CWE-681", "Incorrect Conversion between Numeric Types"),
    ("CWE-770", "Allocation of Resources Without Limits or Throttling"),
    ("CWE-787", "Out-of-bounds Write"),
    ("CWE-908", "Use of Uninitialized Resource"),
];

fn cwe_description(id: &str) -> &'static str {
    CWE_NAMES
        .iter()
        .find(|(known, _)| *known == id)
        .map(|(_, name)| *name)
        .unwrap_or("")
}

/// Numeric ordering key for ids like `CWE-416`; unparseable ids sort last,
/// alphabetically.
fn cwe_sort_key(id: &str) -> (u64, &str) {
    let numeric = id
        .strip_prefix("CWE-")
        .and_then(|digits| digits.parse().ok())
        .unwrap_or(u64::MAX);
    (numeric, id)
}

/// The `k` most frequent weakness classes. Advisories without cwe ids are
/// excluded (with a warning); ties rank by CWE id ascending.
pub fn cwe_top_k(advisories: &[Advisory], k: usize) -> CweRanking {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut missing = 0usize;
    for advisory in advisories {
        match &advisory.cwe_ids {
            Some(ids) if !ids.is_empty() => {
                for id in ids {
                    *counts.entry(id.as_str()).or_insert(0) += 1;
                }
            }
            _ => missing += 1,
        }
    }
    if missing > 0 {
        log::warn!("{missing} advisories carry no cwe ids; excluded from the ranking");
    }

    let mut entries: Vec<CweEntry> = counts
        .into_iter()
        .map(|(id, count)| CweEntry {
            id: id.to_string(),
            description: cwe_description(id).to_string(),
            count,
        })
        .collect();
    entries.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| cwe_sort_key(&a.id).cmp(&cwe_sort_key(&b.id)))
    });
    entries.truncate(k);
    CweRanking { entries }
}

/// Fraction of advisories with no first patched version.
pub fn patchless_proportion(advisories: &[Advisory]) -> f64 {
    if advisories.is_empty() {
        return 0.0;
    }
    let unpatched = advisories
        .iter()
        .filter(|a| a.first_patched_version.is_none())
        .count();
    unpatched as f64 / advisories.len() as f64
}

/// One (advisory, library) pair whose latest version is inside the range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatestAffectedRow {
    pub cve: String,
    pub library: String,
    pub vulnerable_range: String,
    pub latest_version: Version,
    pub published_at: String,
}

struct LatestAffected {
    libraries_with_advisories: BTreeSet<u32>,
    still_affected: BTreeSet<u32>,
    rows: Vec<LatestAffectedRow>,
}

/// Walks version_affects edges: a library's latest version is
/// still-affected when it is an edge target of one of its advisories.
fn latest_affected(graph: &KnowledgeGraph) -> LatestAffected {
    let mut state = LatestAffected {
        libraries_with_advisories: BTreeSet::new(),
        still_affected: BTreeSet::new(),
        rows: Vec::new(),
    };
    for (a_idx, advisory) in graph.advisories().iter().enumerate() {
        let Some(library) = graph.affected_library(a_idx as u32) else {
            continue;
        };
        state.libraries_with_advisories.insert(library);
        let record = graph.library(library);
        let newest =
            Version::parse(&record.newest_version).expect("newest_version validated at ingest");
        let newest_vid = graph
            .version_index(library, &newest)
            .expect("newest_version is among the versions");
        if graph
            .affected_version_ids(a_idx as u32)
            .binary_search(&newest_vid)
            .is_ok()
        {
            state.still_affected.insert(library);
            state.rows.push(LatestAffectedRow {
                cve: advisory.value.clone(),
                library: record.name.clone(),
                vulnerable_range: advisory.vulnerable_version_range.source_text().to_string(),
                latest_version: newest,
                published_at: advisory.published_at.clone(),
            });
        }
    }
    for &library in &state.libraries_with_advisories {
        let record = graph.library(library);
        let declared = Version::parse(&record.newest_version).expect("validated");
        if let Some(greatest) = record.versions.iter().map(|v| &v.num).max() {
            if *greatest != declared {
                log::warn!(
                    "library `{}`: newest_version {declared} differs from greatest release {greatest}",
                    record.name
                );
            }
        }
    }
    state.rows.sort_by(|a, b| {
        (&a.library, &a.cve).cmp(&(&b.library, &b.cve))
    });
    state
}

/// Over libraries with at least one advisory in the graph: the fraction
/// whose latest version still falls in some vulnerable range, plus the
/// offending (advisory, library) rows.
pub fn latest_version_still_affected(graph: &KnowledgeGraph) -> (f64, Vec<LatestAffectedRow>) {
    let state = latest_affected(graph);
    let fraction = if state.libraries_with_advisories.is_empty() {
        0.0
    } else {
        state.still_affected.len() as f64 / state.libraries_with_advisories.len() as f64
    };
    (fraction, state.rows)
}

/// Among libraries whose latest version is still affected, the fraction
/// whose latest version is also yanked.
pub fn yanked_latest_affected(graph: &KnowledgeGraph) -> f64 {
    let state = latest_affected(graph);
    if state.still_affected.is_empty() {
        return 0.0;
    }
    let yanked = state
        .still_affected
        .iter()
        .filter(|&&library| {
            let record = graph.library(library);
            let newest = Version::parse(&record.newest_version).expect("validated");
            record
                .versions
                .iter()
                .any(|v| v.num == newest && v.yanked)
        })
        .count();
    yanked as f64 / state.still_affected.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfix::{advisory, graph_of, library};

    fn advisory_with_severity(cve: &str, severity: &str) -> Advisory {
        let mut a = advisory(cve, "pkg", "<1.0.0");
        a.severity = severity.parse().unwrap();
        a
    }

    // ==== Severity ====

    #[test]
    fn single_class_gets_full_mass() {
        let dist = severity_distribution(&[advisory_with_severity("CVE-2021-0001", "MODERATE")]);
        assert_eq!(dist.fraction(Severity::Moderate), 1.0);
        assert_eq!(dist.fraction(Severity::High), 0.0);
        assert_eq!(dist.total, 1);
        assert!(!dist.is_empty());
    }

    #[test]
    fn classes_split_evenly() {
        let advisories = vec![
            advisory_with_severity("CVE-2021-0001", "LOW"),
            advisory_with_severity("CVE-2021-0002", "LOW"),
            advisory_with_severity("CVE-2021-0003", "HIGH"),
            advisory_with_severity("CVE-2021-0004", "HIGH"),
        ];
        let dist = severity_distribution(&advisories);
        assert_eq!(dist.fraction(Severity::Low), 0.5);
        assert_eq!(dist.fraction(Severity::High), 0.5);
        let sum: f64 = dist.fractions.values().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_distribution_is_flagged() {
        let dist = severity_distribution(&[]);
        assert!(dist.is_empty());
        assert_eq!(dist.fractions.len(), 4);
        assert!(dist.fractions.values().all(|&f| f == 0.0));
    }

    // ==== CVSS ====

    fn advisory_with_cvss(cve: &str, cvss: f64) -> Advisory {
        let mut a = advisory(cve, "pkg", "<1.0.0");
        a.cvss = cvss;
        a
    }

    #[test]
    fn histogram_buckets_scores() {
        let advisories = vec![
            advisory_with_cvss("CVE-2021-0001", 5.0),
            advisory_with_cvss("CVE-2021-0002", 5.0),
            advisory_with_cvss("CVE-2021-0003", 7.5),
        ];
        let histogram = cvss_histogram(&advisories, 2.5);
        assert_eq!(histogram.bins.len(), 4);
        assert_eq!(histogram.bins[2].count, 2);
        assert_eq!((histogram.bins[2].lower, histogram.bins[2].upper), (5.0, 7.5));
        assert_eq!(histogram.bins[3].count, 1);
        assert_eq!(histogram.min, Some(5.0));
        assert_eq!(histogram.max, Some(7.5));
    }

    #[test]
    fn empty_input_gives_empty_bins() {
        let histogram = cvss_histogram(&[], 2.5);
        assert!(histogram.bins.is_empty());
        assert_eq!(histogram.min, None);
        assert_eq!(histogram.max, None);
    }

    #[test]
    fn zero_scores_count_in_bins_but_not_in_extremes() {
        let advisories = vec![
            advisory_with_cvss("CVE-2021-0001", 0.0),
            advisory_with_cvss("CVE-2021-0002", 5.5),
        ];
        let histogram = cvss_histogram(&advisories, 2.5);
        assert_eq!(histogram.bins[0].count, 1);
        assert_eq!(histogram.bins[2].count, 1);
        assert_eq!(histogram.min, Some(5.5));
        assert_eq!(histogram.max, Some(5.5));
    }

    #[test]
    fn top_score_lands_in_final_bin() {
        let histogram = cvss_histogram(&[advisory_with_cvss("CVE-2021-0001", 10.0)], 3.0);
        assert_eq!(histogram.bins.len(), 4);
        assert_eq!(histogram.bins[3].upper, 10.0);
        assert_eq!(histogram.bins[3].count, 1);
    }

    // ==== CWE ====

    fn advisory_with_cwes(cve: &str, ids: Option<&[&str]>) -> Advisory {
        let mut a = advisory(cve, "pkg", "<1.0.0");
        a.cwe_ids = ids.map(|ids| ids.iter().map(|s| s.to_string()).collect());
        a
    }

    #[test]
    fn ranking_counts_descending_with_numeric_tie_break() {
        let advisories = vec![
            advisory_with_cwes("CVE-2021-0001", Some(&["CWE-416"])),
            advisory_with_cwes("CVE-2021-0002", Some(&["CWE-416", "CWE-79"])),
            advisory_with_cwes("CVE-2021-0003", Some(&["CWE-79"])),
            advisory_with_cwes("CVE-2021-0004", Some(&["CWE-908"])),
            advisory_with_cwes("CVE-2021-0005", None),
        ];
        let ranking = cwe_top_k(&advisories, 10);
        let ids: Vec<&str> = ranking.entries.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, ["CWE-79", "CWE-416", "CWE-908"]);
        assert_eq!(ranking.entries[0].count, 2);
        assert_eq!(ranking.entries[1].count, 2);
        assert_eq!(ranking.entries[1].description, "Use After Free");
        assert_eq!(ranking.entries[2].count, 1);
    }

    #[test]
    fn k_caps_the_ranking_length() {
        let advisories = vec![
            advisory_with_cwes("CVE-2021-0001", Some(&["CWE-416"])),
            advisory_with_cwes("CVE-2021-0002", Some(&["CWE-79"])),
        ];
        assert_eq!(cwe_top_k(&advisories, 1).entries.len(), 1);
        assert_eq!(cwe_top_k(&advisories, 99).entries.len(), 2);
        assert!(cwe_top_k(&advisories, 0).entries.is_empty());
    }

    #[test]
    fn counts_never_increase_down_the_ranking() {
        let advisories = vec![
            advisory_with_cwes("CVE-2021-0001", Some(&["CWE-20", "CWE-20"])),
            advisory_with_cwes("CVE-2021-0002", Some(&["CWE-400"])),
            advisory_with_cwes("CVE-2021-0003", Some(&["CWE-400", "CWE-476"])),
        ];
        let ranking = cwe_top_k(&advisories, 10);
        for pair in ranking.entries.windows(2) {
            assert!(pair[0].count >= pair[1].count);
        }
    }

    // ==== Patch availability ====

    #[test]
    fn patchless_fractions() {
        let mut advisories = vec![
            advisory("CVE-2021-0001", "pkg", "<1.0.0"),
            advisory("CVE-2021-0002", "pkg", "<1.0.0"),
            advisory("CVE-2021-0003", "pkg", "<1.0.0"),
            advisory("CVE-2021-0004", "pkg", "<1.0.0"),
        ];
        for a in advisories.iter_mut().take(3) {
            a.first_patched_version = Some("1.0.0".to_string());
        }
        assert_eq!(patchless_proportion(&advisories), 0.25);

        for a in advisories.iter_mut() {
            a.first_patched_version = Some("1.0.0".to_string());
        }
        assert_eq!(patchless_proportion(&advisories), 0.0);
        assert_eq!(patchless_proportion(&[]), 0.0);
    }

    // ==== Latest-version exposure ====

    fn five_library_fixture() -> KnowledgeGraph {
        // Five libraries with advisories; only portaudio's latest version
        // still falls inside its range.
        let libs = vec![
            library("portaudio", &["0.6.0", "0.7.0"]),
            library("fixed1", &["0.9.0", "1.1.0"]),
            library("fixed2", &["0.9.0", "2.0.0"]),
            library("fixed3", &["0.9.0", "1.5.0"]),
            library("fixed4", &["0.9.0", "3.0.0"]),
        ];
        let advisories = vec![
            advisory("CVE-2021-0010", "portaudio", "<=0.7.0"),
            advisory("CVE-2021-0011", "fixed1", "<1.0.0"),
            advisory("CVE-2021-0012", "fixed2", "<1.0.0"),
            advisory("CVE-2021-0013", "fixed3", "<1.0.0"),
            advisory("CVE-2021-0014", "fixed4", "<1.0.0"),
        ];
        graph_of(libs, advisories)
    }

    #[test]
    fn still_affected_latest_is_reported_with_rows() {
        let graph = five_library_fixture();
        let (fraction, rows) = latest_version_still_affected(&graph);
        assert_eq!(fraction, 0.2);
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        assert_eq!(row.library, "portaudio");
        assert_eq!(row.cve, "CVE-2021-0010");
        assert_eq!(row.vulnerable_range, "<=0.7.0");
        assert_eq!(row.latest_version, Version::parse("0.7.0").unwrap());
    }

    #[test]
    fn latest_beyond_every_range_is_excluded() {
        let graph = graph_of(
            vec![library("safe", &["0.9.0", "1.2.0"])],
            vec![advisory("CVE-2021-0020", "safe", "<1.0.0")],
        );
        let (fraction, rows) = latest_version_still_affected(&graph);
        assert_eq!(fraction, 0.0);
        assert!(rows.is_empty());
    }

    #[test]
    fn no_advisories_means_zero_fraction() {
        let graph = graph_of(vec![library("quiet", &["1.0.0"])], Vec::new());
        let (fraction, rows) = latest_version_still_affected(&graph);
        assert_eq!(fraction, 0.0);
        assert!(rows.is_empty());
        assert_eq!(yanked_latest_affected(&graph), 0.0);
    }

    #[test]
    fn latest_affected_agrees_with_range_recompute() {
        // Second route: matches() against each advisory range directly.
        let graph = five_library_fixture();
        let (fraction, _) = latest_version_still_affected(&graph);

        let mut libraries: BTreeSet<&str> = BTreeSet::new();
        let mut affected: BTreeSet<&str> = BTreeSet::new();
        for advisory in graph.advisories() {
            let Some(library) = graph
                .libraries()
                .iter()
                .find(|l| l.name == advisory.package_name)
            else {
                continue;
            };
            libraries.insert(&library.name);
            let newest = Version::parse(&library.newest_version).unwrap();
            if advisory.vulnerable_version_range.matches(&newest) {
                affected.insert(&library.name);
            }
        }
        assert_eq!(fraction, affected.len() as f64 / libraries.len() as f64);
    }

    #[test]
    fn yanked_fraction_over_still_affected_libraries() {
        let mut exposed = library("exposed", &["0.5.0"]);
        exposed.versions[0].yanked = true;
        let exposed_too = library("open", &["0.5.0"]);
        let graph = graph_of(
            vec![exposed, exposed_too],
            vec![
                advisory("CVE-2021-0030", "exposed", "<1.0.0"),
                advisory("CVE-2021-0031", "open", "<1.0.0"),
            ],
        );
        let (fraction, _) = latest_version_still_affected(&graph);
        assert_eq!(fraction, 1.0);
        assert_eq!(yanked_latest_affected(&graph), 0.5);
    }
}
