//! Schema parsing, normalization and validation.

pub mod dataset;
mod document;
pub mod format;
mod ir;
pub mod pattern;
mod validate;

pub use dataset::{assign_tier, count_fields, ingest_dataset, schema_stats, ComplexityTier, DatasetRecord, IngestOptions, IngestionReport, StatsTable};
pub use document::{parse_schema, parse_schema_with_id, Draft, ParseError, SchemaDocument};
pub use ir::{escape_pointer, is_in_place_applicator, normalize, JsonType, Keywords, Node, NodeId, NodeKind, NormalizeError, SchemaIR, TypeSet, DEFAULT_BASE};
pub use validate::{has_type, validate_instance, ValidateError, ValidationOutcome, Validator, Violation};
