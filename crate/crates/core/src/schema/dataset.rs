//! Corpus ingestion, complexity tiers and the per-group statistics table.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::document::{parse_schema_with_id, ParseError, SchemaDocument};
use super::ir::{normalize, NormalizeError};
use crate::json::{to_canonical_string, to_sorted_string, JsonValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComplexityTier {
    Trivial,
    Easy,
    Medium,
    Hard,
    Ultra,
}

impl ComplexityTier {
    pub const ALL: [ComplexityTier; 5] =
        [ComplexityTier::Trivial, ComplexityTier::Easy, ComplexityTier::Medium, ComplexityTier::Hard, ComplexityTier::Ultra];

    pub fn as_str(self) -> &'static str {
        match self {
            ComplexityTier::Trivial => "trivial",
            ComplexityTier::Easy => "easy",
            ComplexityTier::Medium => "medium",
            ComplexityTier::Hard => "hard",
            ComplexityTier::Ultra => "ultra",
        }
    }
}

impl fmt::Display for ComplexityTier {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ComplexityTier {
    type Err = String;

    fn from_str(s: &str) -> Result<ComplexityTier, String> {
        ComplexityTier::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| format!("unknown tier {s:?}"))
    }
}

/// Tiers partition the field counts: a shared boundary such as 30 belongs
/// to the lower tier.
pub fn assign_tier(field_count: u64) -> ComplexityTier {
    match field_count {
        0..=9 => ComplexityTier::Trivial,
        10..=30 => ComplexityTier::Easy,
        31..=100 => ComplexityTier::Medium,
        101..=500 => ComplexityTier::Hard,
        _ => ComplexityTier::Ultra,
    }
}

/// Every object key anywhere in the raw document, keyword names and keys
/// inside `enum`/`const` literals included.
pub fn count_fields(doc: &SchemaDocument) -> u64 {
    fn count(v: &JsonValue) -> u64 {
        match v {
            JsonValue::Object(map) => map.values().map(|x| 1 + count(x)).sum(),
            JsonValue::Array(items) => items.iter().map(count).sum(),
            _ => 0,
        }
    }
    count(&doc.raw)
}

const SCHEMA_MAPS: &[&str] = &["properties", "patternProperties", "$defs", "definitions", "dependentSchemas"];
const SCHEMA_LISTS: &[&str] = &["allOf", "anyOf", "oneOf", "prefixItems"];
const SCHEMA_SINGLES: &[&str] = &[
    "additionalProperties",
    "additionalItems",
    "unevaluatedProperties",
    "unevaluatedItems",
    "propertyNames",
    "contains",
    "not",
    "if",
    "then",
    "else",
];

/// Immediate subschemas of a raw schema object.
fn subschemas(v: &JsonValue) -> Vec<&JsonValue> {
    let Some(map) = v.as_object() else { return Vec::new() };
    let is_schema = |x: &&JsonValue| x.is_object() || x.is_boolean();
    let mut out = Vec::new();
    for (k, x) in map {
        let k = k.as_str();
        if SCHEMA_MAPS.contains(&k) {
            out.extend(x.as_object().into_iter().flat_map(|m| m.values()).filter(is_schema));
        } else if SCHEMA_LISTS.contains(&k) {
            out.extend(x.as_array().into_iter().flatten().filter(is_schema));
        } else if SCHEMA_SINGLES.contains(&k) {
            out.extend(Some(x).filter(is_schema));
        } else if k == "items" {
            match x {
                JsonValue::Array(items) => out.extend(items.iter().filter(is_schema)),
                other => out.extend(Some(other).filter(is_schema)),
            }
        } else if k == "dependencies" {
            // Only the schema form; the array form lists property names.
            out.extend(x.as_object().into_iter().flat_map(|m| m.values()).filter(|x| x.is_object()));
        }
    }
    out
}

/// Nesting of schema nodes, the root being level 0.
pub fn schema_depth(doc: &SchemaDocument) -> u64 {
    fn depth(v: &JsonValue) -> u64 {
        subschemas(v).into_iter().map(|c| 1 + depth(c)).max().unwrap_or(0)
    }
    depth(&doc.raw)
}

/// Largest number of immediate subschemas under one schema node.
pub fn max_fan_out(doc: &SchemaDocument) -> u64 {
    fn fan(v: &JsonValue) -> u64 {
        let children = subschemas(v);
        let own = children.len() as u64;
        children.into_iter().map(fan).fold(own, u64::max)
    }
    fan(&doc.raw)
}

/// Keywords that carry no constraint on instances.
const METADATA: &[&str] = &[
    "$schema",
    "$id",
    "id",
    "$anchor",
    "$comment",
    "$defs",
    "definitions",
    "title",
    "description",
    "default",
    "examples",
    "deprecated",
    "readOnly",
    "writeOnly",
];

/// A schema that every instance satisfies on its face: `true`, or an
/// object holding only metadata.
pub fn is_empty_schema(doc: &SchemaDocument) -> bool {
    match &doc.raw {
        JsonValue::Bool(b) => *b,
        JsonValue::Object(map) => map.keys().all(|k| METADATA.contains(&k.as_str())),
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetRecord {
    #[serde(serialize_with = "serialize_doc")]
    pub schema: SchemaDocument,
    pub dataset: String,
    pub tier: ComplexityTier,
    pub field_count: u64,
    /// Length of the canonical compact serialization.
    pub size_bytes: u64,
    pub max_fan_out: u64,
    pub depth: u64,
}

fn serialize_doc<S: serde::Serializer>(doc: &SchemaDocument, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&doc.source_id)
}

impl DatasetRecord {
    pub fn new(schema: SchemaDocument, dataset: impl Into<String>) -> DatasetRecord {
        let field_count = count_fields(&schema);
        DatasetRecord {
            dataset: dataset.into(),
            tier: assign_tier(field_count),
            field_count,
            size_bytes: to_canonical_string(&schema.raw).len() as u64,
            max_fan_out: max_fan_out(&schema),
            depth: schema_depth(&schema),
            schema,
        }
    }

    pub fn source_id(&self) -> &str {
        &self.schema.source_id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    MalformedJson,
    NotASchema,
    UnresolvedExternalRef,
    InvalidSchema,
    Empty,
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Dropped {
    pub source_id: String,
    pub reason: DropReason,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestionReport {
    pub read: usize,
    pub kept: usize,
    pub dropped_by_reason: BTreeMap<DropReason, usize>,
    pub dropped: Vec<Dropped>,
}

impl IngestionReport {
    fn drop(&mut self, source_id: &str, reason: DropReason, detail: String) {
        *self.dropped_by_reason.entry(reason).or_default() += 1;
        self.dropped.push(Dropped { source_id: source_id.to_string(), reason, detail });
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("read     {}\nkept     {}\n", self.read, self.kept);
        for (reason, n) in &self.dropped_by_reason {
            let name = serde_json::to_value(reason).expect("reason serializes");
            out.push_str(&format!("dropped  {:<24} {n}\n", name.as_str().unwrap_or_default()));
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    /// JSON object mapping source ids to dataset names. A `_metadata.json`
    /// next to the schemas is used when this is not set.
    pub metadata: Option<PathBuf>,
    /// Dataset name for ids the metadata does not mention.
    pub default_dataset: Option<String>,
    /// Top-level keys removed before anything else, for corpora that mix
    /// tool configuration into their schemas.
    pub strip_fields: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("metadata file {0}: {1}")]
    Metadata(PathBuf, String),
}

fn read(path: &Path) -> Result<Vec<u8>, IngestError> {
    fs::read(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })
}

/// Raw documents of a corpus: a directory of `.json` files (ids are file
/// stems; names starting with `_` are sidecars) or a file with one JSON
/// document per line (ids are `stem:line`).
pub fn read_corpus(path: &Path) -> Result<Vec<(String, Vec<u8>)>, IngestError> {
    let io = |source| IngestError::Io { path: path.to_path_buf(), source };
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .filter(|p| !p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with('_')))
            .collect();
        files.sort();
        files
            .into_iter()
            .map(|p| Ok((p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string(), read(&p)?)))
            .collect()
    } else {
        let text = read(path)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("corpus");
        Ok(text
            .split(|&b| b == b'\n')
            .enumerate()
            .filter(|(_, line)| line.iter().any(|b| !b.is_ascii_whitespace()))
            .map(|(i, line)| (format!("{stem}:{}", i + 1), line.to_vec()))
            .collect())
    }
}

fn load_metadata(path: &Path, opts: &IngestOptions) -> Result<HashMap<String, String>, IngestError> {
    let sidecar = path.join("_metadata.json");
    let file = match &opts.metadata {
        Some(p) => p.clone(),
        None if path.is_dir() && sidecar.is_file() => sidecar,
        None => return Ok(HashMap::new()),
    };
    let text = read(&file)?;
    serde_json::from_slice(&text).map_err(|e| IngestError::Metadata(file, e.to_string()))
}

/// Reads, cleans and deduplicates a corpus.
pub fn ingest_dataset(path: &Path, opts: &IngestOptions) -> Result<(Vec<DatasetRecord>, IngestionReport), IngestError> {
    let metadata = load_metadata(path, opts)?;
    let fallback = opts
        .default_dataset
        .clone()
        .unwrap_or_else(|| path.file_stem().and_then(|s| s.to_str()).unwrap_or("corpus").to_string());
    let docs = read_corpus(path)?;
    let dataset_of = |id: &str| metadata.get(id).cloned().unwrap_or_else(|| fallback.clone());
    Ok(ingest_documents(docs, dataset_of, opts))
}

/// The cleaning pipeline over documents already in memory. Documents are
/// taken in order; the first of a set of duplicates is kept.
pub fn ingest_documents(
    docs: Vec<(String, Vec<u8>)>,
    dataset_of: impl Fn(&str) -> String,
    opts: &IngestOptions,
) -> (Vec<DatasetRecord>, IngestionReport) {
    let mut report = IngestionReport { read: docs.len(), ..IngestionReport::default() };
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (id, bytes) in docs {
        let mut doc = match parse_schema_with_id(&bytes, &id) {
            Ok(doc) => doc,
            Err(e @ ParseError::MalformedJson { .. }) => {
                report.drop(&id, DropReason::MalformedJson, e.to_string());
                continue;
            }
            Err(e @ ParseError::NotASchema(_)) => {
                report.drop(&id, DropReason::NotASchema, e.to_string());
                continue;
            }
        };
        if let JsonValue::Object(map) = &mut doc.raw {
            for f in &opts.strip_fields {
                map.shift_remove(f);
            }
        }
        if is_empty_schema(&doc) {
            report.drop(&id, DropReason::Empty, String::new());
            continue;
        }
        match normalize(&doc) {
            Ok(_) => {}
            Err(e @ NormalizeError::UnresolvedExternalRef(_)) => {
                report.drop(&id, DropReason::UnresolvedExternalRef, e.to_string());
                continue;
            }
            Err(e) => {
                report.drop(&id, DropReason::InvalidSchema, e.to_string());
                continue;
            }
        }
        if !seen.insert(to_sorted_string(&doc.raw)) {
            report.drop(&id, DropReason::Duplicate, String::new());
            continue;
        }
        let dataset = dataset_of(&id);
        records.push(DatasetRecord::new(doc, dataset));
    }
    report.kept = records.len();
    (records, report)
}

/// Lower median: for an even count, the smaller of the two middle values.
pub fn lower_median<T: PartialOrd + Copy>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("values are ordered"));
    Some(v[(v.len() - 1) / 2])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MedMax {
    pub median: f64,
    pub max: f64,
}

impl MedMax {
    fn of(values: &[f64]) -> MedMax {
        MedMax {
            median: lower_median(values).expect("groups are nonempty"),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsRow {
    pub group: String,
    pub count: usize,
    pub size_kb: MedMax,
    pub field_count: MedMax,
    pub max_fan_out: MedMax,
    pub depth: MedMax,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsTable {
    pub rows: Vec<StatsRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("no records")]
    EmptyInput,
}

/// How records are grouped into rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupBy {
    #[default]
    Dataset,
    Tier,
    /// Dataset and tier, as in `github-easy`.
    DatasetTier,
}

fn group_key(r: &DatasetRecord, by: GroupBy) -> String {
    match by {
        GroupBy::Dataset => r.dataset.clone(),
        GroupBy::Tier => r.tier.to_string(),
        GroupBy::DatasetTier => format!("{}-{}", r.dataset, r.tier),
    }
}

/// Median and maximum of each statistic per group. Sizes are in KiB.
pub fn schema_stats(records: &[DatasetRecord], by: GroupBy) -> Result<StatsTable, StatsError> {
    if records.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut groups: BTreeMap<String, Vec<&DatasetRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(group_key(r, by)).or_default().push(r);
    }
    let rows = groups
        .into_iter()
        .map(|(group, rs)| {
            let col = |f: fn(&DatasetRecord) -> f64| MedMax::of(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
            StatsRow {
                count: rs.len(),
                size_kb: col(|r| r.size_bytes as f64 / 1024.0),
                field_count: col(|r| r.field_count as f64),
                max_fan_out: col(|r| r.max_fan_out as f64),
                depth: col(|r| r.depth as f64),
                group,
            }
        })
        .collect();
    Ok(StatsTable { rows })
}

impl StatsTable {
    pub fn to_text(&self) -> String {
        let header = ["Dataset", "Count", "Size (KB)", "Field Count", "Max Fan-Out", "Schema Depth"];
        let mut lines = vec![header.map(String::from).to_vec()];
        for r in &self.rows {
            let int = |m: MedMax| format!("{} / {}", m.median, m.max);
            lines.push(vec![
                r.group.clone(),
                r.count.to_string(),
                format!("{:.1} / {:.1}", r.size_kb.median, r.size_kb.max),
                int(r.field_count),
                int(r.max_fan_out),
                int(r.depth),
            ]);
        }
        render_columns(&lines)
    }
}

/// Left-aligned columns separated by two spaces.
pub fn render_columns(lines: &[Vec<String>]) -> String {
    let cols = lines.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| lines.iter().filter_map(|l| l.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for l in lines {
        let cells: Vec<String> = l.iter().enumerate().map(|(c, s)| format!("{s:<w$}", w = widths[c])).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::parse_schema;

    fn doc(text: &str) -> SchemaDocument {
        parse_schema(text.as_bytes()).unwrap()
    }

    #[test]
    fn counts_every_key() {
        assert_eq!(count_fields(&doc("{}")), 0);
        assert_eq!(count_fields(&doc(r#"{"type":"object","properties":{"a":{"type":"integer"}}}"#)), 4);
        assert_eq!(count_fields(&doc(r#"{"enum":[{"x":1}],"allOf":[{"type":"null"}]}"#)), 4);
    }

    #[test]
    fn tier_boundaries() {
        assert_eq!(assign_tier(6), ComplexityTier::Trivial);
        assert_eq!(assign_tier(9), ComplexityTier::Trivial);
        assert_eq!(assign_tier(10), ComplexityTier::Easy);
        assert_eq!(assign_tier(30), ComplexityTier::Easy);
        assert_eq!(assign_tier(31), ComplexityTier::Medium);
        assert_eq!(assign_tier(100), ComplexityTier::Medium);
        assert_eq!(assign_tier(175), ComplexityTier::Hard);
        assert_eq!(assign_tier(500), ComplexityTier::Hard);
        assert_eq!(assign_tier(501), ComplexityTier::Ultra);
    }

    #[test]
    fn depth_and_fan_out() {
        let d = doc(r#"{"properties":{"a":{"properties":{"b":{}}}}}"#);
        assert_eq!(schema_depth(&d), 2);
        assert_eq!(max_fan_out(&d), 1);
        let d = doc(r#"{"anyOf":[{},{},{"items":[{},{}]}],"dependencies":{"a":["b"]}}"#);
        assert_eq!(schema_depth(&d), 2);
        assert_eq!(max_fan_out(&d), 3);
        assert_eq!(schema_depth(&doc("true")), 0);
    }

    #[test]
    fn empty_schemas() {
        assert!(is_empty_schema(&doc("{}")));
        assert!(is_empty_schema(&doc(r#"{"title":"x","$schema":"http://json-schema.org/draft-07/schema#"}"#)));
        assert!(!is_empty_schema(&doc("false")));
        assert!(!is_empty_schema(&doc(r#"{"type":"null"}"#)));
    }

    #[test]
    fn lower_median_picks_the_smaller_middle() {
        assert_eq!(lower_median(&[1, 2, 100]), Some(2));
        assert_eq!(lower_median(&[4, 1, 3, 2]), Some(2));
        assert_eq!(lower_median::<u8>(&[]), None);
    }
}
