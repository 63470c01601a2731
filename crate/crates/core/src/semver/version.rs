use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SemverError;

/// One dot-separated identifier in a pre-release tag.
///
/// Numeric identifiers compare numerically and order below alphanumeric ones.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PreIdent {
    Numeric(u64),
    Alpha(String),
}

impl PreIdent {
    fn parse(input: &str, ident: &str) -> Result<Self, SemverError> {
        if ident.is_empty() {
            return Err(SemverError::version(input, ident, "empty pre-release identifier"));
        }
        if ident.bytes().all(|b| b.is_ascii_digit()) {
            if ident.len() > 1 && ident.starts_with('0') {
                return Err(SemverError::version(
                    input,
                    ident,
                    "leading zero in numeric pre-release identifier",
                ));
            }
            ident
                .parse::<u64>()
                .map(PreIdent::Numeric)
                .map_err(|_| SemverError::version(input, ident, "numeric identifier out of range"))
        } else if ident
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'-')
        {
            Ok(PreIdent::Alpha(ident.to_string()))
        } else {
            Err(SemverError::version(
                input,
                ident,
                "pre-release identifier may contain only ASCII alphanumerics and hyphens",
            ))
        }
    }
}

impl Ord for PreIdent {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (PreIdent::Numeric(a), PreIdent::Numeric(b)) => a.cmp(b),
            (PreIdent::Numeric(_), PreIdent::Alpha(_)) => Ordering::Less,
            (PreIdent::Alpha(_), PreIdent::Numeric(_)) => Ordering::Greater,
            (PreIdent::Alpha(a), PreIdent::Alpha(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for PreIdent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PreIdent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreIdent::Numeric(n) => write!(f, "{n}"),
            PreIdent::Alpha(s) => f.write_str(s),
        }
    }
}

/// Compare two pre-release tags where the empty tag (a full release)
/// orders above every non-empty one.
pub(crate) fn cmp_prerelease(a: &[PreIdent], b: &[PreIdent]) -> Ordering {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        (false, false) => {
            for (x, y) in a.iter().zip(b.iter()) {
                match x.cmp(y) {
                    Ordering::Equal => continue,
                    ord => return ord,
                }
            }
            a.len().cmp(&b.len())
        }
    }
}

/// A semantic version `major.minor.patch` with an optional pre-release tag
/// and optional build metadata.
///
/// Build metadata is preserved for rendering but takes no part in equality,
/// ordering, or hashing: `1.0.0+a` and `1.0.0+b` denote the same release.
#[derive(Debug, Clone)]
pub struct Version {
    pub major: u64,
    pub minor: u64,
    pub patch: u64,
    pub pre: Vec<PreIdent>,
    pub build: Option<String>,
}

impl Version {
    pub fn new(major: u64, minor: u64, patch: u64) -> Self {
        Version {
            major,
            minor,
            patch,
            pre: Vec::new(),
            build: None,
        }
    }

    pub fn with_pre(mut self, pre: Vec<PreIdent>) -> Self {
        self.pre = pre;
        self
    }

    pub fn is_prerelease(&self) -> bool {
        !self.pre.is_empty()
    }

    pub fn core_triple(&self) -> (u64, u64, u64) {
        (self.major, self.minor, self.patch)
    }

    /// Parse a version, reporting the offending span on failure.
    pub fn parse(text: &str) -> Result<Self, SemverError> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(SemverError::version(text, text, "empty version text"));
        }

        let (rest, build) = match trimmed.split_once('+') {
            Some((head, meta)) => {
                if meta.is_empty() || meta.split('.').any(|seg| seg.is_empty()) {
                    return Err(SemverError::version(text, meta, "empty build metadata segment"));
                }
                if !meta
                    .bytes()
                    .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'.')
                {
                    return Err(SemverError::version(
                        text,
                        meta,
                        "build metadata may contain only ASCII alphanumerics, hyphens, and dots",
                    ));
                }
                (head, Some(meta.to_string()))
            }
            None => (trimmed, None),
        };

        let (core, pre) = match rest.split_once('-') {
            Some((head, tag)) => {
                let pre = tag
                    .split('.')
                    .map(|ident| PreIdent::parse(text, ident))
                    .collect::<Result<Vec<_>, _>>()?;
                (head, pre)
            }
            None => (rest, Vec::new()),
        };

        let mut parts = core.split('.');
        let major = parse_numeric_component(text, parts.next())?;
        let minor = parse_numeric_component(text, parts.next())?;
        let patch = parse_numeric_component(text, parts.next())?;
        if let Some(extra) = parts.next() {
            return Err(SemverError::version(
                text,
                extra,
                "a version has exactly three numeric components",
            ));
        }

        Ok(Version {
            major,
            minor,
            patch,
            pre,
            build,
        })
    }
}

pub(crate) fn parse_numeric_component(input: &str, part: Option<&str>) -> Result<u64, SemverError> {
    let part = part.ok_or_else(|| {
        SemverError::version(input, input, "a version has exactly three numeric components")
    })?;
    if part.is_empty() {
        return Err(SemverError::version(input, part, "empty version component"));
    }
    if !part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(SemverError::version(input, part, "non-numeric version component"));
    }
    if part.len() > 1 && part.starts_with('0') {
        return Err(SemverError::version(input, part, "leading zero in version component"));
    }
    part.parse::<u64>()
        .map_err(|_| SemverError::version(input, part, "version component out of range"))
}

impl PartialEq for Version {
    fn eq(&self, other: &Self) -> bool {
        self.core_triple() == other.core_triple() && self.pre == other.pre
    }
}

impl Eq for Version {}

impl std::hash::Hash for Version {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.core_triple().hash(state);
        self.pre.hash(state);
    }
}

impl Ord for Version {
    fn cmp(&self, other: &Self) -> Ordering {
        self.core_triple()
            .cmp(&other.core_triple())
            .then_with(|| cmp_prerelease(&self.pre, &other.pre))
    }
}

impl PartialOrd for Version {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.major, self.minor, self.patch)?;
        for (i, ident) in self.pre.iter().enumerate() {
            f.write_str(if i == 0 { "-" } else { "." })?;
            write!(f, "{ident}")?;
        }
        if let Some(build) = &self.build {
            write!(f, "+{build}")?;
        }
        Ok(())
    }
}

impl FromStr for Version {
    type Err = SemverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Version::parse(s)
    }
}

impl Serialize for Version {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Version {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Version::parse(&text).map_err(serde::de::Error::custom)
    }
}
