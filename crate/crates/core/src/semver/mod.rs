//! Version and version-requirement handling under Cargo's compatibility
//! convention: bare versions are caret requirements, the leftmost non-zero
//! component bounds compatible updates, and pre-release versions are matched
//! only when asked for by name.

mod interval;
mod requirement;
mod version;

pub use interval::{normalize_requirement, Bound, Interval, NormalRange};
pub use requirement::{compatible, max_satisfying, Comparator, Op, Partial, Requirement};
pub use version::{PreIdent, Version};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemverError {
    #[error("invalid version `{input}`: {reason} (at `{span}`)")]
    Version {
        input: String,
        span: String,
        reason: String,
    },
    #[error("invalid requirement `{input}`: {reason} (at `{span}`)")]
    Requirement {
        input: String,
        span: String,
        reason: String,
    },
    #[error("empty interval: bounds {lower} and {upper} admit no version")]
    EmptyInterval { lower: String, upper: String },
}

impl SemverError {
    pub(crate) fn version(input: &str, span: &str, reason: &str) -> Self {
        SemverError::Version {
            input: input.to_string(),
            span: span.to_string(),
            reason: reason.to_string(),
        }
    }

    pub(crate) fn requirement(input: &str, span: &str, reason: &str) -> Self {
        SemverError::Requirement {
            input: input.to_string(),
            span: span.to_string(),
            reason: reason.to_string(),
        }
    }

    /// Recategorize a version parse error raised while parsing requirement
    /// text; the embedded input and span already point at that text.
    pub(crate) fn into_requirement(self) -> Self {
        match self {
            SemverError::Version {
                input,
                span,
                reason,
            } => SemverError::Requirement {
                input,
                span,
                reason,
            },
            other => other,
        }
    }
}
