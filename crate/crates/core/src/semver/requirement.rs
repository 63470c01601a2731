use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::version::{cmp_prerelease, parse_numeric_component, PreIdent, Version};
use super::SemverError;

/// Operator of a single comparator clause.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    /// `^1.2.3` or a bare `1.2.3`: no change to the leftmost non-zero component.
    Caret,
    /// `~1.2.3`: patch-level drift when a minor is written, minor-level otherwise.
    Tilde,
    /// `1.2.*`: any version sharing the written prefix.
    Wildcard,
    /// `=1.2.3`: exactly the written version; on a shorter prefix, its whole block.
    Exact,
    Greater,
    GreaterEq,
    Less,
    LessEq,
}

/// The version prefix a comparator is written against.
///
/// `minor` and `patch` may be omitted in requirement text (`>1.2`, `~1`);
/// a pre-release tag is only accepted on a full three-component prefix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partial {
    pub major: u64,
    pub minor: Option<u64>,
    pub patch: Option<u64>,
    pub pre: Vec<PreIdent>,
}

impl Partial {
    /// Number of written numeric components, 1 to 3.
    pub fn components(&self) -> u8 {
        1 + self.minor.is_some() as u8 + self.patch.is_some() as u8
    }

    /// The written triple with omitted components as zero.
    pub fn filled_triple(&self) -> (u64, u64, u64) {
        (self.major, self.minor.unwrap_or(0), self.patch.unwrap_or(0))
    }

    /// The smallest version carrying this prefix: omitted components become
    /// zero and the pre-release tag is kept.
    pub fn floor_version(&self) -> Version {
        let (major, minor, patch) = self.filled_triple();
        Version::new(major, minor, patch).with_pre(self.pre.clone())
    }

    /// The smallest triple above every version sharing the written prefix.
    /// `None` only on arithmetic overflow, where no such triple exists.
    pub fn next_prefix_triple(&self) -> Option<(u64, u64, u64)> {
        match self.minor {
            Some(minor) => minor.checked_add(1).map(|m| (self.major, m, 0)),
            None => self.major.checked_add(1).map(|m| (m, 0, 0)),
        }
    }

    /// Exclusive upper bound of the caret range rooted at this prefix: the
    /// first triple that changes the leftmost non-zero written component.
    pub fn caret_upper_triple(&self) -> Option<(u64, u64, u64)> {
        if self.major > 0 {
            return self.major.checked_add(1).map(|m| (m, 0, 0));
        }
        match self.minor {
            None => Some((1, 0, 0)),
            Some(minor) if minor > 0 => minor.checked_add(1).map(|m| (0, m, 0)),
            Some(_) => match self.patch {
                Some(patch) => patch.checked_add(1).map(|p| (0, 0, p)),
                None => Some((0, 1, 0)),
            },
        }
    }

    /// Order `version` against the smallest version carrying this prefix.
    pub fn cmp_floor(&self, version: &Version) -> Ordering {
        version
            .core_triple()
            .cmp(&self.filled_triple())
            .then_with(|| cmp_prerelease(&version.pre, &self.pre))
    }

    fn parse(input: &str, text: &str) -> Result<Self, SemverError> {
        let (core, pre) = match text.split_once('-') {
            Some((head, tag)) => {
                let pre = tag
                    .split('.')
                    .map(|ident| PreIdent::parse_for_requirement(input, ident))
                    .collect::<Result<Vec<_>, _>>()?;
                (head, pre)
            }
            None => (text, Vec::new()),
        };

        let mut parts = core.split('.');
        let major =
            parse_numeric_component(input, parts.next()).map_err(|e| e.into_requirement())?;
        let minor = parts
            .next()
            .map(|p| parse_numeric_component(input, Some(p)).map_err(|e| e.into_requirement()))
            .transpose()?;
        let patch = parts
            .next()
            .map(|p| parse_numeric_component(input, Some(p)).map_err(|e| e.into_requirement()))
            .transpose()?;
        if let Some(extra) = parts.next() {
            return Err(SemverError::requirement(
                input,
                extra,
                "a comparator has at most three numeric components",
            ));
        }
        if !pre.is_empty() && patch.is_none() {
            return Err(SemverError::requirement(
                input,
                text,
                "a pre-release tag requires a full three-component version",
            ));
        }
        Ok(Partial {
            major,
            minor,
            patch,
            pre,
        })
    }
}

impl PreIdent {
    fn parse_for_requirement(input: &str, ident: &str) -> Result<Self, SemverError> {
        // Reuse the version-text grammar; only the error category differs.
        let probe = format!("0.0.0-{ident}");
        match Version::parse(&probe) {
            Ok(v) => Ok(v.pre.into_iter().next().expect("one identifier parsed")),
            Err(_) => Err(SemverError::requirement(
                input,
                ident,
                "invalid pre-release identifier",
            )),
        }
    }
}

/// One comparator clause of a requirement.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Comparator {
    pub op: Op,
    pub base: Partial,
    /// For `Op::Wildcard`: how many numeric components precede the `*`.
    /// Zero means the bare `*` clause. Unused by the other operators.
    pub wildcard_components: u8,
}

impl Comparator {
    /// Whether this clause pins exactly one release: `=` with a full triple.
    pub fn is_exact_pin(&self) -> bool {
        self.op == Op::Exact && self.base.components() == 3
    }

    /// Whether `version` lies in the version set this clause denotes, before
    /// the requirement-level pre-release gate is applied.
    pub fn matches(&self, version: &Version) -> bool {
        let p = &self.base;
        let full = p.components() == 3;
        match self.op {
            Op::Exact if full => p.cmp_floor(version) == Ordering::Equal,
            Op::Exact => self.within_prefix_block(version),
            Op::Wildcard => self.wildcard_components == 0 || self.within_prefix_block(version),
            Op::GreaterEq => p.cmp_floor(version) != Ordering::Less,
            Op::Greater if full => p.cmp_floor(version) == Ordering::Greater,
            // `>1.2` admits only versions above the whole 1.2.x block.
            Op::Greater => !self.below_next_prefix(version),
            Op::Less => p.cmp_floor(version) == Ordering::Less,
            Op::LessEq if full => p.cmp_floor(version) != Ordering::Greater,
            // `<=1.2` admits the whole 1.2.x block.
            Op::LessEq => self.below_next_prefix(version),
            Op::Tilde => {
                p.cmp_floor(version) != Ordering::Less && self.below_next_prefix(version)
            }
            Op::Caret => {
                p.cmp_floor(version) != Ordering::Less
                    && below_triple(version, p.caret_upper_triple())
            }
        }
    }

    fn within_prefix_block(&self, version: &Version) -> bool {
        self.base.cmp_floor(version) != Ordering::Less && self.below_next_prefix(version)
    }

    fn below_next_prefix(&self, version: &Version) -> bool {
        below_triple(version, self.base.next_prefix_triple())
    }
}

/// Whether `version` orders below the release at `triple`. An absent triple
/// stands for a bound past the largest representable version.
fn below_triple(version: &Version, triple: Option<(u64, u64, u64)>) -> bool {
    match triple {
        Some(t) => {
            version
                .core_triple()
                .cmp(&t)
                .then_with(|| cmp_prerelease(&version.pre, &[]))
                == Ordering::Less
        }
        None => true,
    }
}

/// A parsed version requirement: one or more comma-separated comparators,
/// all of which must hold.
///
/// The original text is kept and is what `Display` renders.
#[derive(Debug, Clone)]
pub struct Requirement {
    comparators: Vec<Comparator>,
    source_text: String,
}

impl Requirement {
    /// Parse requirement text, reporting the offending span on failure.
    pub fn parse(text: &str) -> Result<Self, SemverError> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(SemverError::requirement(text, text, "empty requirement text"));
        }
        let comparators = trimmed
            .split(',')
            .map(|clause| parse_comparator(text, clause))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Requirement {
            comparators,
            source_text: trimmed.to_string(),
        })
    }

    pub fn comparators(&self) -> &[Comparator] {
        &self.comparators
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    /// Whether `version` satisfies every comparator.
    ///
    /// A pre-release version is considered at all only when some comparator
    /// carries a pre-release tag on the same `major.minor.patch` triple;
    /// otherwise it is invisible to the requirement.
    pub fn matches(&self, version: &Version) -> bool {
        if version.is_prerelease() && !self.admits_prerelease_of(version) {
            return false;
        }
        self.comparators.iter().all(|c| c.matches(version))
    }

    /// The pre-release gate: whether some comparator names a pre-release on
    /// exactly this version's `major.minor.patch` triple.
    pub fn admits_prerelease_of(&self, version: &Version) -> bool {
        self.comparators
            .iter()
            .any(|c| !c.base.pre.is_empty() && c.base.filled_triple() == version.core_triple())
    }

    /// Whether some comparator is `=` against exactly `version`.
    pub fn pins_exactly(&self, version: &Version) -> bool {
        self.comparators
            .iter()
            .any(|c| c.is_exact_pin() && c.base.floor_version() == *version)
    }
}

fn parse_comparator(input: &str, clause: &str) -> Result<Comparator, SemverError> {
    let clause = clause.trim();
    if clause.is_empty() {
        return Err(SemverError::requirement(input, clause, "empty comparator clause"));
    }

    let (op, rest) = if let Some(rest) = clause.strip_prefix(">=") {
        (Some(Op::GreaterEq), rest)
    } else if let Some(rest) = clause.strip_prefix("<=") {
        (Some(Op::LessEq), rest)
    } else if let Some(rest) = clause.strip_prefix('>') {
        (Some(Op::Greater), rest)
    } else if let Some(rest) = clause.strip_prefix('<') {
        (Some(Op::Less), rest)
    } else if let Some(rest) = clause.strip_prefix('^') {
        (Some(Op::Caret), rest)
    } else if let Some(rest) = clause.strip_prefix('~') {
        (Some(Op::Tilde), rest)
    } else if let Some(rest) = clause.strip_prefix('=') {
        (Some(Op::Exact), rest)
    } else {
        (None, clause)
    };
    let rest = rest.trim_start();
    if rest.is_empty() {
        return Err(SemverError::requirement(input, clause, "operator without a version"));
    }

    if let Some((prefix_components, before)) = split_wildcard(rest) {
        if op.is_some() {
            return Err(SemverError::requirement(
                input,
                clause,
                "a wildcard cannot follow an operator",
            ));
        }
        let base = if prefix_components == 0 {
            Partial {
                major: 0,
                minor: None,
                patch: None,
                pre: Vec::new(),
            }
        } else {
            Partial::parse(input, before)?
        };
        if !base.pre.is_empty() {
            return Err(SemverError::requirement(
                input,
                clause,
                "a wildcard cannot carry a pre-release tag",
            ));
        }
        if prefix_components != 0 && base.components() != prefix_components {
            return Err(SemverError::requirement(
                input,
                clause,
                "wildcard must be the last component",
            ));
        }
        return Ok(Comparator {
            op: Op::Wildcard,
            base,
            wildcard_components: prefix_components,
        });
    }

    let base = Partial::parse(input, rest)?;
    Ok(Comparator {
        // A bare version is shorthand for a caret comparator.
        op: op.unwrap_or(Op::Caret),
        base,
        wildcard_components: 0,
    })
}

/// If the clause ends in a wildcard component, return how many numeric
/// components precede it along with that prefix text.
fn split_wildcard(text: &str) -> Option<(u8, &str)> {
    let is_wild = |s: &str| matches!(s, "*" | "x" | "X");
    if is_wild(text) {
        return Some((0, ""));
    }
    let (before, last) = text.rsplit_once('.')?;
    if is_wild(last) {
        let components = before.split('.').count() as u8;
        Some((components, before))
    } else {
        None
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source_text)
    }
}

impl FromStr for Requirement {
    type Err = SemverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Requirement::parse(s)
    }
}

impl PartialEq for Requirement {
    fn eq(&self, other: &Self) -> bool {
        self.comparators == other.comparators
    }
}

impl Eq for Requirement {}

impl Serialize for Requirement {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Requirement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Requirement::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Whether two versions may stand in for one another under compatible-update
/// rules: their triples agree through the leftmost non-zero component of the
/// smaller version (through the patch position when that version is 0.0.0).
pub fn compatible(a: &Version, b: &Version) -> bool {
    let smaller = if a <= b { a } else { b };
    let (ta, tb) = (a.core_triple(), b.core_triple());
    match smaller.core_triple() {
        (0, 0, _) => ta == tb,
        (0, _, _) => ta.0 == tb.0 && ta.1 == tb.1,
        _ => ta.0 == tb.0,
    }
}

/// Pick the highest candidate satisfying `requirement`.
///
/// Yanked candidates are skipped unless `allow_yanked` is set or the
/// requirement pins that exact version with `=`.
pub fn max_satisfying<'a>(
    candidates: impl IntoIterator<Item = (&'a Version, bool)>,
    requirement: &Requirement,
    allow_yanked: bool,
) -> Option<&'a Version> {
    candidates
        .into_iter()
        .filter(|(v, yanked)| {
            (!yanked || allow_yanked || requirement.pins_exactly(v)) && requirement.matches(v)
        })
        .map(|(v, _)| v)
        .max()
}
