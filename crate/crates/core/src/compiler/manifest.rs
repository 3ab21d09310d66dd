//! The keyword manifest: which keywords the compiler claims to support.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

const V1: &str = include_str!("../../data/manifest-v1.json");

/// Extra requirement attached to a partially supported keyword.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    /// Numeric bounds only where the instance is restricted to integers
    /// (or to an explicit finite set of values).
    IntegerOnly,
    /// Patterns must be expressible as a finite automaton.
    Translatable,
    /// `propertyNames` must reduce to a string automaton.
    StringConstraints,
    /// `oneOf` branches must be provably mutually exclusive.
    DisjointBranches,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::IntegerOnly => "integer-only",
            Condition::Translatable => "translatable",
            Condition::StringConstraints => "string-constraints",
            Condition::DisjointBranches => "disjoint-branches",
        }
    }
}

impl FromStr for Condition {
    type Err = ManifestError;

    fn from_str(s: &str) -> Result<Condition, ManifestError> {
        Ok(match s {
            "integer-only" => Condition::IntegerOnly,
            "translatable" => Condition::Translatable,
            "string-constraints" => Condition::StringConstraints,
            "disjoint-branches" => Condition::DisjointBranches,
            other => return Err(ManifestError::UnknownCondition(other.to_string())),
        })
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SupportLevel {
    Full,
    Partial(Vec<Condition>),
    None,
}

impl FromStr for SupportLevel {
    type Err = ManifestError;

    fn from_str(s: &str) -> Result<SupportLevel, ManifestError> {
        match s {
            "full" => Ok(SupportLevel::Full),
            "none" => Ok(SupportLevel::None),
            _ => match s.strip_prefix("partial:") {
                Some(rest) => Ok(SupportLevel::Partial(rest.split(',').map(str::parse).collect::<Result<_, _>>()?)),
                None => Err(ManifestError::UnknownLevel(s.to_string())),
            },
        }
    }
}

impl fmt::Display for SupportLevel {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            SupportLevel::Full => f.write_str("full"),
            SupportLevel::None => f.write_str("none"),
            SupportLevel::Partial(conds) => {
                let names: Vec<&str> = conds.iter().map(|c| c.as_str()).collect();
                write!(f, "partial:{}", names.join(","))
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("malformed manifest: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("unknown support level {0:?}")]
    UnknownLevel(String),
    #[error("unknown condition {0:?}")]
    UnknownCondition(String),
}

#[derive(Serialize, Deserialize)]
struct RawManifest {
    version: String,
    keywords: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordManifest {
    pub version: String,
    pub keywords: BTreeMap<String, SupportLevel>,
}

impl KeywordManifest {
    /// The manifest shipped with this crate.
    pub fn v1() -> KeywordManifest {
        KeywordManifest::from_json(V1).expect("bundled manifest parses")
    }

    pub fn from_json(text: &str) -> Result<KeywordManifest, ManifestError> {
        let raw: RawManifest = serde_json::from_str(text)?;
        let keywords = raw.keywords.into_iter().map(|(k, v)| Ok((k, v.parse()?))).collect::<Result<_, ManifestError>>()?;
        Ok(KeywordManifest { version: raw.version, keywords })
    }

    pub fn to_json(&self) -> String {
        let raw = RawManifest {
            version: self.version.clone(),
            keywords: self.keywords.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
        };
        serde_json::to_string_pretty(&raw).expect("manifest serializes")
    }

    /// Keywords missing from the manifest are unsupported.
    pub fn level(&self, keyword: &str) -> &SupportLevel {
        self.keywords.get(keyword).unwrap_or(&SupportLevel::None)
    }

    /// Whether `keyword` may be used subject to `condition` holding.
    pub fn allows(&self, keyword: &str, condition: Condition) -> bool {
        match self.level(keyword) {
            SupportLevel::Full => true,
            SupportLevel::Partial(conds) => conds.contains(&condition),
            SupportLevel::None => false,
        }
    }
}

impl Default for KeywordManifest {
    fn default() -> KeywordManifest {
        KeywordManifest::v1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_manifest_round_trips() {
        let m = KeywordManifest::v1();
        assert_eq!(m.version, "v1");
        assert_eq!(m.level("type"), &SupportLevel::Full);
        assert_eq!(m.level("uniqueItems"), &SupportLevel::None);
        assert_eq!(m.level("minimum"), &SupportLevel::Partial(vec![Condition::IntegerOnly]));
        assert_eq!(m.level("notAKeyword"), &SupportLevel::None);
        assert_eq!(KeywordManifest::from_json(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn bad_levels_are_errors() {
        let bad = r#"{"version":"x","keywords":{"type":"sometimes"}}"#;
        assert!(matches!(KeywordManifest::from_json(bad), Err(ManifestError::UnknownLevel(_))));
        let bad = r#"{"version":"x","keywords":{"type":"partial:maybe"}}"#;
        assert!(matches!(KeywordManifest::from_json(bad), Err(ManifestError::UnknownCondition(_))));
    }
}
