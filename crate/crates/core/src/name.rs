//! Package name normalization.
//!
//! Registry names compare case-insensitively and treat runs of `.`, `-` and
//! `_` as a single separator. Every name stored in a snapshot is in this
//! normalized form.

use std::borrow::Borrow;
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// A package name in normalized form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct PackageName(String);

impl PackageName {
    /// Normalizes `raw` and wraps it.
    pub fn new(raw: &str) -> Result<Self> {
        normalize_name(raw).map(PackageName)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl Deref for PackageName {
    type Target = str;

    fn deref(&self) -> &str {
        &self.0
    }
}

impl Borrow<str> for PackageName {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for PackageName {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PackageName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for PackageName {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        PackageName::new(&raw).map_err(serde::de::Error::custom)
    }
}

fn is_separator(c: char) -> bool {
    matches!(c, '.' | '-' | '_')
}

/// Lowercases `raw` and collapses every run of `.`, `-`, `_` into one `-`.
///
/// Surrounding whitespace is ignored. Fails on empty input.
pub fn normalize_name(raw: &str) -> Result<String> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(Error::InvalidName {
            raw: raw.to_string(),
            reason: "empty name",
        });
    }
    let mut out = String::with_capacity(trimmed.len());
    let mut in_run = false;
    for c in trimmed.chars() {
        if is_separator(c) {
            if !in_run {
                out.push('-');
            }
            in_run = true;
        } else {
            out.extend(c.to_lowercase());
            in_run = false;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(normalize_name("Django").unwrap(), "django");
        assert_eq!(normalize_name("foo.bar__baz").unwrap(), "foo-bar-baz");
        assert_eq!(normalize_name("requests").unwrap(), "requests");
        assert_eq!(normalize_name("Zope.Interface").unwrap(), "zope-interface");
        assert_eq!(normalize_name("a-_.-b").unwrap(), "a-b");
    }

    #[test]
    fn empty_is_rejected() {
        assert!(matches!(
            normalize_name(""),
            Err(Error::InvalidName { .. })
        ));
        assert!(normalize_name("   ").is_err());
    }

    #[test]
    fn deserialize_normalizes() {
        let name: PackageName = serde_json::from_str("\"My_Pkg\"").unwrap();
        assert_eq!(name.as_str(), "my-pkg");
        assert!(serde_json::from_str::<PackageName>("\"\"").is_err());
    }

    proptest! {
        #[test]
        fn idempotent(raw in "[A-Za-z0-9._-]{1,24}") {
            let once = normalize_name(&raw).unwrap();
            let twice = normalize_name(&once).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert!(!once.contains('.') && !once.contains('_') && !once.contains("--"));
            prop_assert_eq!(once.to_lowercase(), once.clone());
        }
    }
}
