use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::requirement::{Comparator, Op, Requirement};
use super::version::Version;
use super::SemverError;

/// One endpoint of an interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bound {
    pub version: Version,
    pub inclusive: bool,
}

impl Bound {
    pub fn inclusive(version: Version) -> Self {
        Bound {
            version,
            inclusive: true,
        }
    }

    pub fn exclusive(version: Version) -> Self {
        Bound {
            version,
            inclusive: false,
        }
    }
}

/// A contiguous, non-empty range of versions. An absent bound is unbounded
/// on that side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    lower: Option<Bound>,
    upper: Option<Bound>,
}

impl Interval {
    /// Build an interval, rejecting one that contains no version.
    pub fn new(lower: Option<Bound>, upper: Option<Bound>) -> Result<Self, SemverError> {
        if let (Some(lo), Some(hi)) = (&lower, &upper) {
            let empty = match lo.version.cmp(&hi.version) {
                Ordering::Greater => true,
                Ordering::Equal => !(lo.inclusive && hi.inclusive),
                Ordering::Less => false,
            };
            if empty {
                return Err(SemverError::EmptyInterval {
                    lower: lo.version.to_string(),
                    upper: hi.version.to_string(),
                });
            }
        }
        Ok(Interval { lower, upper })
    }

    pub fn unbounded() -> Self {
        Interval {
            lower: None,
            upper: None,
        }
    }

    pub fn lower(&self) -> Option<&Bound> {
        self.lower.as_ref()
    }

    pub fn upper(&self) -> Option<&Bound> {
        self.upper.as_ref()
    }

    /// Order-theoretic membership; the requirement-level pre-release gate is
    /// not this type's concern.
    pub fn contains(&self, version: &Version) -> bool {
        let above_lower = match &self.lower {
            None => true,
            Some(b) => match version.cmp(&b.version) {
                Ordering::Greater => true,
                Ordering::Equal => b.inclusive,
                Ordering::Less => false,
            },
        };
        let below_upper = match &self.upper {
            None => true,
            Some(b) => match version.cmp(&b.version) {
                Ordering::Less => true,
                Ordering::Equal => b.inclusive,
                Ordering::Greater => false,
            },
        };
        above_lower && below_upper
    }

    /// Intersect two intervals; `None` when they share no version.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lower = tighter_bound(self.lower.as_ref(), other.lower.as_ref(), Ordering::Greater);
        let upper = tighter_bound(self.upper.as_ref(), other.upper.as_ref(), Ordering::Less);
        Interval::new(lower.cloned(), upper.cloned()).ok()
    }
}

/// Of two optional bounds on the same side, pick the tighter one: the one
/// whose version compares `prefer` to the other's, with exclusivity breaking
/// ties. An absent bound is never tighter.
fn tighter_bound<'a>(
    a: Option<&'a Bound>,
    b: Option<&'a Bound>,
    prefer: Ordering,
) -> Option<&'a Bound> {
    match (a, b) {
        (None, other) => other,
        (other, None) => other,
        (Some(x), Some(y)) => match x.version.cmp(&y.version) {
            ord if ord == prefer => Some(x),
            Ordering::Equal => {
                if x.inclusive {
                    Some(y)
                } else {
                    Some(x)
                }
            }
            _ => Some(y),
        },
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.lower, &self.upper) {
            (None, None) => f.write_str("*"),
            (Some(lo), Some(hi)) if lo.inclusive && hi.inclusive && lo.version == hi.version => {
                write!(f, "={}", lo.version)
            }
            (lower, upper) => {
                let mut wrote = false;
                if let Some(lo) = lower {
                    write!(f, "{}{}", if lo.inclusive { ">=" } else { ">" }, lo.version)?;
                    wrote = true;
                }
                if let Some(hi) = upper {
                    if wrote {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}{}", if hi.inclusive { "<=" } else { "<" }, hi.version)?;
                }
                Ok(())
            }
        }
    }
}

/// The canonical interval form of a requirement. Comparators intersect, so
/// the set is either empty (an unsatisfiable requirement) or one interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalRange {
    intervals: Vec<Interval>,
}

impl NormalRange {
    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_unsatisfiable(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Order-theoretic membership across the interval set.
    pub fn contains(&self, version: &Version) -> bool {
        self.intervals.iter().any(|i| i.contains(version))
    }
}

impl fmt::Display for NormalRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return f.write_str("unsatisfiable");
        }
        for (i, interval) in self.intervals.iter().enumerate() {
            if i > 0 {
                f.write_str(" || ")?;
            }
            write!(f, "{interval}")?;
        }
        Ok(())
    }
}

/// Reduce a requirement to its canonical interval set: the intersection of
/// every comparator's version range. The result denotes exactly the version
/// set `Requirement::matches` tests against, before the pre-release gate.
pub fn normalize_requirement(requirement: &Requirement) -> NormalRange {
    let mut acc = Interval::unbounded();
    for comparator in requirement.comparators() {
        let next = match comparator_interval(comparator) {
            Some(interval) => acc.intersect(&interval),
            None => None,
        };
        match next {
            Some(narrowed) => acc = narrowed,
            None => return NormalRange { intervals: Vec::new() },
        }
    }
    NormalRange {
        intervals: vec![acc],
    }
}

/// The version range one comparator denotes. `None` when the range is empty,
/// which only arises from `>` on a prefix whose successor overflows.
fn comparator_interval(comparator: &Comparator) -> Option<Interval> {
    let p = &comparator.base;
    let full = p.components() == 3;
    let floor = p.floor_version();
    // An overflowing successor leaves the block unbounded above.
    let block_upper = p
        .next_prefix_triple()
        .map(|t| Bound::exclusive(triple_version(t)));

    match comparator.op {
        Op::Caret => {
            let upper = p
                .caret_upper_triple()
                .map(|t| Bound::exclusive(triple_version(t)));
            Interval::new(Some(Bound::inclusive(floor)), upper).ok()
        }
        Op::Tilde => Interval::new(Some(Bound::inclusive(floor)), block_upper).ok(),
        Op::Wildcard if comparator.wildcard_components == 0 => Some(Interval::unbounded()),
        Op::Wildcard => Interval::new(Some(Bound::inclusive(floor)), block_upper).ok(),
        Op::Exact if full => {
            Interval::new(Some(Bound::inclusive(floor.clone())), Some(Bound::inclusive(floor)))
                .ok()
        }
        Op::Exact => Interval::new(Some(Bound::inclusive(floor)), block_upper).ok(),
        Op::Greater if full => Interval::new(Some(Bound::exclusive(floor)), None).ok(),
        // `>prefix` admits only versions above the whole block; there is
        // nothing above the largest representable one.
        Op::Greater => {
            let t = p.next_prefix_triple()?;
            Interval::new(Some(Bound::inclusive(triple_version(t))), None).ok()
        }
        Op::GreaterEq => Interval::new(Some(Bound::inclusive(floor)), None).ok(),
        Op::Less => Interval::new(None, Some(Bound::exclusive(floor))).ok(),
        Op::LessEq if full => Interval::new(None, Some(Bound::inclusive(floor))).ok(),
        Op::LessEq => Interval::new(None, block_upper).ok(),
    }
}

fn triple_version((major, minor, patch): (u64, u64, u64)) -> Version {
    Version::new(major, minor, patch)
}
