//! Dependency requirement specifiers.
//!
//! Only the parts the dependency model needs are extracted: the target name,
//! whether the requirement is gated on an extra, and whether it carries an
//! environment marker at all. Version constraints are accepted and discarded.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::name::PackageName;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementSpec {
    pub target_name: PackageName,
    /// The marker references `extra`, so the dependency is optional.
    pub is_optional: bool,
    pub has_environment_marker: bool,
    pub raw: String,
}

fn fail(spec: &str, offset: usize, reason: &'static str) -> Error {
    Error::Requirement {
        spec: spec.to_string(),
        offset,
        reason,
    }
}

/// Parses a requirement such as `"NumPy[extra1] (>=1.21) ; python_version >= '3.8'"`.
pub fn parse_requirement(spec: &str) -> Result<RequirementSpec> {
    let bytes = spec.as_bytes();
    let mut pos = skip_ws(bytes, 0);

    let name_start = pos;
    if pos >= bytes.len() || !bytes[pos].is_ascii_alphanumeric() {
        return Err(fail(spec, pos, "expected package name"));
    }
    while pos < bytes.len()
        && (bytes[pos].is_ascii_alphanumeric() || matches!(bytes[pos], b'.' | b'-' | b'_'))
    {
        pos += 1;
    }
    if !bytes[pos - 1].is_ascii_alphanumeric() {
        return Err(fail(spec, pos - 1, "package name must end with a letter or digit"));
    }
    let target_name = PackageName::new(&spec[name_start..pos])?;

    pos = skip_ws(bytes, pos);
    if pos < bytes.len() && bytes[pos] == b'[' {
        match spec[pos..].find(']') {
            Some(close) => pos = skip_ws(bytes, pos + close + 1),
            None => return Err(fail(spec, pos, "unclosed extras list")),
        }
    }

    if pos < bytes.len()
        && !matches!(
            bytes[pos],
            b'(' | b'<' | b'>' | b'=' | b'!' | b'~' | b'@' | b';' | b','
        )
    {
        return Err(fail(spec, pos, "unexpected character after package name"));
    }

    let (is_optional, has_environment_marker) = match spec[pos..].find(';') {
        Some(rel) => {
            let marker_start = pos + rel + 1;
            let marker = spec[marker_start..].trim();
            if marker.is_empty() {
                return Err(fail(spec, marker_start, "empty environment marker"));
            }
            (marker_mentions_extra(marker), true)
        }
        None => (false, false),
    };

    Ok(RequirementSpec {
        target_name,
        is_optional,
        has_environment_marker,
        raw: spec.to_string(),
    })
}

fn skip_ws(bytes: &[u8], mut pos: usize) -> usize {
    while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
        pos += 1;
    }
    pos
}

/// True if the marker expression uses the `extra` variable outside of a
/// quoted string.
fn marker_mentions_extra(marker: &str) -> bool {
    let bytes = marker.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'"' || c == b'\'' {
            i += 1;
            while i < bytes.len() && bytes[i] != c {
                i += 1;
            }
            i += 1;
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            if &marker[start..i] == "extra" {
                return true;
            }
        } else {
            i += 1;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_with_versions() {
        let r = parse_requirement("requests>=2.0,<3").unwrap();
        assert_eq!(r.target_name.as_str(), "requests");
        assert!(!r.is_optional);
        assert!(!r.has_environment_marker);
    }

    #[test]
    fn extra_marker_is_optional() {
        let r = parse_requirement("pytest ; extra == 'test'").unwrap();
        assert_eq!(r.target_name.as_str(), "pytest");
        assert!(r.is_optional);
        assert!(r.has_environment_marker);

        let r = parse_requirement("coverage; python_version>'3' and 'dev' == extra").unwrap();
        assert!(r.is_optional);
    }

    #[test]
    fn marker_without_extra() {
        let r = parse_requirement("NumPy (>=1.21) ; python_version >= '3.8'").unwrap();
        assert_eq!(r.target_name.as_str(), "numpy");
        assert!(!r.is_optional);
        assert!(r.has_environment_marker);
    }

    #[test]
    fn quoted_extra_word_is_not_a_variable() {
        let r = parse_requirement("foo; platform_release == 'extra'").unwrap();
        assert!(!r.is_optional);
    }

    #[test]
    fn extras_and_urls() {
        let r = parse_requirement("Black[d, jupyter]>=22").unwrap();
        assert_eq!(r.target_name.as_str(), "black");
        let r = parse_requirement("pip @ https://example.org/pip-1.0.zip ; os_name == 'nt'").unwrap();
        assert_eq!(r.target_name.as_str(), "pip");
        assert!(r.has_environment_marker);
        let r = parse_requirement("  zope.interface  ").unwrap();
        assert_eq!(r.target_name.as_str(), "zope-interface");
    }

    #[test]
    fn errors_carry_offsets() {
        let offset = |s: &str| match parse_requirement(s) {
            Err(Error::Requirement { offset, .. }) => offset,
            other => panic!("expected parse error for {s:?}, got {other:?}"),
        };
        assert_eq!(offset(""), 0);
        assert_eq!(offset(">=1.0"), 0);
        assert_eq!(offset("  -foo"), 2);
        assert_eq!(offset("foo-"), 3);
        assert_eq!(offset("foo[bar"), 3);
        assert_eq!(offset("foo bar"), 4);
        assert_eq!(offset("foo;"), 4);
    }
}
