use std::fmt;

use crate::json::{parse_json, JsonError, JsonValue};

/// JSON Schema draft, as read from `$schema`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Draft {
    #[serde(rename = "draft-04")]
    Draft4,
    #[serde(rename = "draft-06")]
    Draft6,
    #[serde(rename = "draft-07")]
    Draft7,
    #[serde(rename = "2019-09")]
    Draft2019_09,
    #[serde(rename = "2020-12")]
    Draft2020_12,
}

impl Draft {
    /// Recognizes the official meta-schema URIs, with or without a trailing
    /// empty fragment and in either `http` or `https` form.
    pub fn from_uri(uri: &str) -> Option<Draft> {
        let trimmed = uri.trim_end_matches('#');
        let path = trimmed
            .strip_prefix("https://")
            .or_else(|| trimmed.strip_prefix("http://"))?
            .strip_prefix("json-schema.org/")?;
        match path {
            "draft-04/schema" => Some(Draft::Draft4),
            "draft-06/schema" => Some(Draft::Draft6),
            "draft-07/schema" => Some(Draft::Draft7),
            "draft/2019-09/schema" => Some(Draft::Draft2019_09),
            "draft/2020-12/schema" => Some(Draft::Draft2020_12),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Draft::Draft4 => "draft-04",
            Draft::Draft6 => "draft-06",
            Draft::Draft7 => "draft-07",
            Draft::Draft2019_09 => "2019-09",
            Draft::Draft2020_12 => "2020-12",
        }
    }

    /// Drafts before 2019-09 ignore keywords next to `$ref`.
    pub fn ref_overrides_siblings(self) -> bool {
        self <= Draft::Draft7
    }
}

impl fmt::Display for Draft {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A parsed, not yet normalized schema.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaDocument {
    pub raw: JsonValue,
    pub source_id: String,
    pub declared_draft: Option<Draft>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("malformed JSON at byte {offset}: {message}")]
    MalformedJson { offset: usize, message: String },
    #[error("top-level value is a {0}, not a schema")]
    NotASchema(&'static str),
}

impl SchemaDocument {
    pub fn new(raw: JsonValue, source_id: impl Into<String>) -> Result<SchemaDocument, ParseError> {
        let kind = match &raw {
            JsonValue::Object(_) | JsonValue::Bool(_) => None,
            JsonValue::Null => Some("null"),
            JsonValue::Number(_) => Some("number"),
            JsonValue::String(_) => Some("string"),
            JsonValue::Array(_) => Some("array"),
        };
        if let Some(kind) = kind {
            return Err(ParseError::NotASchema(kind));
        }
        let declared_draft = raw.get("$schema").and_then(JsonValue::as_str).and_then(Draft::from_uri);
        Ok(SchemaDocument { raw, source_id: source_id.into(), declared_draft })
    }

    /// `$schema` value as written, even when it is not a known draft.
    pub fn schema_uri(&self) -> Option<&str> {
        self.raw.get("$schema").and_then(JsonValue::as_str)
    }

    pub fn is_boolean(&self) -> bool {
        self.raw.is_boolean()
    }
}

/// Parses schema text. Boolean schemas are accepted.
pub fn parse_schema(text: &[u8]) -> Result<SchemaDocument, ParseError> {
    parse_schema_with_id(text, "")
}

pub fn parse_schema_with_id(text: &[u8], source_id: &str) -> Result<SchemaDocument, ParseError> {
    let raw = parse_json(text).map_err(|e| match e {
        JsonError::Malformed { offset, message } => ParseError::MalformedJson { offset, message },
        JsonError::DuplicateKey { key } => ParseError::MalformedJson { offset: 0, message: format!("duplicate key {key:?}") },
    })?;
    SchemaDocument::new(raw, source_id)
}
