//! Normalized schema representation.
//!
//! [`normalize`] turns a [`SchemaDocument`] into an arena of [`Node`]s. Every
//! subschema gets a [`NodeId`], `$ref`s are resolved to node ids through
//! `$id`/`$anchor` bookkeeping, and legacy draft spellings (`items` arrays,
//! `dependencies`, boolean `exclusiveMaximum`, `id`) are rewritten to their
//! 2020-12 equivalents.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use url::Url;

use super::document::{Draft, SchemaDocument};
use crate::json::{Decimal, JsonValue, Map};

/// Base URI used for documents without a root `$id`.
pub const DEFAULT_BASE: &str = "json-schema:///schema.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JsonType {
    Null,
    Boolean,
    Integer,
    Number,
    String,
    Array,
    Object,
}

impl JsonType {
    pub const ALL: [JsonType; 7] = [
        JsonType::Null,
        JsonType::Boolean,
        JsonType::Integer,
        JsonType::Number,
        JsonType::String,
        JsonType::Array,
        JsonType::Object,
    ];

    pub fn from_name(name: &str) -> Option<JsonType> {
        Some(match name {
            "null" => JsonType::Null,
            "boolean" => JsonType::Boolean,
            "integer" => JsonType::Integer,
            "number" => JsonType::Number,
            "string" => JsonType::String,
            "array" => JsonType::Array,
            "object" => JsonType::Object,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            JsonType::Null => "null",
            JsonType::Boolean => "boolean",
            JsonType::Integer => "integer",
            JsonType::Number => "number",
            JsonType::String => "string",
            JsonType::Array => "array",
            JsonType::Object => "object",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

/// A set of JSON types. `Number` admits every number; `Integer` only
/// integral ones, so `{Number}` already contains all integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TypeSet(u8);

impl TypeSet {
    pub const EMPTY: TypeSet = TypeSet(0);

    pub fn all() -> TypeSet {
        JsonType::ALL.iter().copied().collect()
    }

    pub fn contains(self, t: JsonType) -> bool {
        self.0 & t.bit() != 0
    }

    pub fn insert(&mut self, t: JsonType) {
        self.0 |= t.bit();
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Intersection under the number/integer subtyping rule.
    pub fn intersect(self, other: TypeSet) -> TypeSet {
        let mut out = TypeSet(self.0 & other.0);
        let int_in = |s: TypeSet| s.contains(JsonType::Integer) || s.contains(JsonType::Number);
        if !out.contains(JsonType::Integer)
            && !out.contains(JsonType::Number)
            && int_in(self)
            && int_in(other)
        {
            out.insert(JsonType::Integer);
        }
        out
    }

    /// Whether any number is admitted; `Some(true)` when only integers are.
    pub fn number_kind(self) -> Option<bool> {
        if self.contains(JsonType::Number) {
            Some(false)
        } else if self.contains(JsonType::Integer) {
            Some(true)
        } else {
            None
        }
    }

    pub fn iter(self) -> impl Iterator<Item = JsonType> {
        JsonType::ALL.into_iter().filter(move |t| self.contains(*t))
    }
}

impl FromIterator<JsonType> for TypeSet {
    fn from_iter<I: IntoIterator<Item = JsonType>>(iter: I) -> TypeSet {
        let mut set = TypeSet::EMPTY;
        for t in iter {
            set.insert(t);
        }
        set
    }
}

/// Keywords of one object schema, already type-checked.
#[derive(Debug, Clone, Default)]
pub struct Keywords {
    pub types: Option<TypeSet>,
    pub enum_values: Option<Vec<JsonValue>>,
    pub const_value: Option<JsonValue>,

    pub multiple_of: Option<Decimal>,
    pub maximum: Option<Decimal>,
    pub exclusive_maximum: Option<Decimal>,
    pub minimum: Option<Decimal>,
    pub exclusive_minimum: Option<Decimal>,

    pub max_length: Option<u64>,
    pub min_length: Option<u64>,
    pub pattern: Option<String>,
    pub format: Option<String>,

    pub prefix_items: Option<Vec<NodeId>>,
    pub items: Option<NodeId>,
    pub contains: Option<NodeId>,
    pub max_contains: Option<u64>,
    pub min_contains: Option<u64>,
    pub max_items: Option<u64>,
    pub min_items: Option<u64>,
    pub unique_items: bool,

    pub properties: Vec<(String, NodeId)>,
    pub pattern_properties: Vec<(String, NodeId)>,
    pub additional_properties: Option<NodeId>,
    pub property_names: Option<NodeId>,
    pub required: Vec<String>,
    pub max_properties: Option<u64>,
    pub min_properties: Option<u64>,
    pub dependent_required: Vec<(String, Vec<String>)>,
    pub dependent_schemas: Vec<(String, NodeId)>,

    pub all_of: Option<Vec<NodeId>>,
    pub any_of: Option<Vec<NodeId>>,
    pub one_of: Option<Vec<NodeId>>,
    pub not: Option<NodeId>,
    pub if_schema: Option<NodeId>,
    pub then_schema: Option<NodeId>,
    pub else_schema: Option<NodeId>,

    pub reference: Option<NodeId>,
    pub dynamic_ref: Option<String>,
    pub unevaluated_items: Option<NodeId>,
    pub unevaluated_properties: Option<NodeId>,

    /// Keywords this implementation does not know. They carry no meaning
    /// (JSON Schema ignores unknown keywords) but are kept for reporting.
    pub unknown: Vec<String>,
}

impl Keywords {
    /// Names of the semantic keywords present, in a fixed order.
    pub fn present(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut push = |cond: bool, name: &'static str| {
            if cond {
                out.push(name)
            }
        };
        push(self.types.is_some(), "type");
        push(self.enum_values.is_some(), "enum");
        push(self.const_value.is_some(), "const");
        push(self.multiple_of.is_some(), "multipleOf");
        push(self.maximum.is_some(), "maximum");
        push(self.exclusive_maximum.is_some(), "exclusiveMaximum");
        push(self.minimum.is_some(), "minimum");
        push(self.exclusive_minimum.is_some(), "exclusiveMinimum");
        push(self.max_length.is_some(), "maxLength");
        push(self.min_length.is_some(), "minLength");
        push(self.pattern.is_some(), "pattern");
        push(self.format.is_some(), "format");
        push(self.prefix_items.is_some(), "prefixItems");
        push(self.items.is_some(), "items");
        push(self.contains.is_some(), "contains");
        push(self.max_contains.is_some(), "maxContains");
        push(self.min_contains.is_some(), "minContains");
        push(self.max_items.is_some(), "maxItems");
        push(self.min_items.is_some(), "minItems");
        push(self.unique_items, "uniqueItems");
        push(!self.properties.is_empty(), "properties");
        push(!self.pattern_properties.is_empty(), "patternProperties");
        push(self.additional_properties.is_some(), "additionalProperties");
        push(self.property_names.is_some(), "propertyNames");
        push(!self.required.is_empty(), "required");
        push(self.max_properties.is_some(), "maxProperties");
        push(self.min_properties.is_some(), "minProperties");
        push(!self.dependent_required.is_empty(), "dependentRequired");
        push(!self.dependent_schemas.is_empty(), "dependentSchemas");
        push(self.all_of.is_some(), "allOf");
        push(self.any_of.is_some(), "anyOf");
        push(self.one_of.is_some(), "oneOf");
        push(self.not.is_some(), "not");
        push(self.if_schema.is_some(), "if");
        push(self.then_schema.is_some(), "then");
        push(self.else_schema.is_some(), "else");
        push(self.reference.is_some(), "$ref");
        push(self.dynamic_ref.is_some(), "$dynamicRef");
        push(self.unevaluated_items.is_some(), "unevaluatedItems");
        push(self.unevaluated_properties.is_some(), "unevaluatedProperties");
        out
    }

    /// Direct subschemas with the keyword that owns them.
    pub fn children(&self) -> Vec<(&'static str, NodeId)> {
        let mut out = Vec::new();
        let single = [
            ("items", self.items),
            ("contains", self.contains),
            ("additionalProperties", self.additional_properties),
            ("propertyNames", self.property_names),
            ("not", self.not),
            ("if", self.if_schema),
            ("then", self.then_schema),
            ("else", self.else_schema),
            ("$ref", self.reference),
            ("unevaluatedItems", self.unevaluated_items),
            ("unevaluatedProperties", self.unevaluated_properties),
        ];
        for (k, id) in single {
            if let Some(id) = id {
                out.push((k, id));
            }
        }
        let lists = [
            ("prefixItems", &self.prefix_items),
            ("allOf", &self.all_of),
            ("anyOf", &self.any_of),
            ("oneOf", &self.one_of),
        ];
        for (k, ids) in lists {
            for id in ids.iter().flatten() {
                out.push((k, *id));
            }
        }
        for (_, id) in &self.properties {
            out.push(("properties", *id));
        }
        for (_, id) in &self.pattern_properties {
            out.push(("patternProperties", *id));
        }
        for (_, id) in &self.dependent_schemas {
            out.push(("dependentSchemas", *id));
        }
        out
    }
}

/// Whether a keyword applies its subschemas to the same instance location.
pub fn is_in_place_applicator(keyword: &str) -> bool {
    matches!(keyword, "$ref" | "allOf" | "anyOf" | "oneOf" | "not" | "if" | "then" | "else" | "dependentSchemas")
}

#[derive(Debug, Clone)]
pub enum NodeKind {
    Bool(bool),
    Keywords(Box<Keywords>),
}

#[derive(Debug, Clone)]
pub struct Node {
    /// JSON pointer of this subschema inside the raw document.
    pub location: String,
    pub base: String,
    pub kind: NodeKind,
}

impl Node {
    pub fn keywords(&self) -> Option<&Keywords> {
        match &self.kind {
            NodeKind::Keywords(k) => Some(k),
            NodeKind::Bool(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SchemaIR {
    pub nodes: Vec<Node>,
    pub root: NodeId,
    /// Root-level `$defs`/`definitions` entries.
    pub definitions: Vec<(String, NodeId)>,
    /// `$ref` targets that lie on a reference cycle.
    pub cycles: BTreeSet<NodeId>,
    pub draft: Draft,
    pub source_id: String,
}

impl SchemaIR {
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn node_at(&self, pointer: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.location == pointer).map(|i| NodeId(i as u32))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node ids reachable from the root, in discovery order.
    pub fn reachable(&self) -> Vec<NodeId> {
        let mut seen = vec![false; self.nodes.len()];
        let mut order = Vec::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id.index()], true) {
                continue;
            }
            order.push(id);
            if let Some(k) = self.node(id).keywords() {
                for (_, child) in k.children().into_iter().rev() {
                    stack.push(child);
                }
            }
        }
        order
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NormalizeError {
    #[error("unresolved external reference {0}")]
    UnresolvedExternalRef(String),
    #[error("reference {0} does not resolve inside the document")]
    UnresolvedRef(String),
    #[error("reference cycle through {0} never consumes input")]
    RefCycleTooDeep(String),
    #[error("invalid value for {keyword} at {path}: {reason}")]
    InvalidKeyword { path: String, keyword: String, reason: String },
}

const ANNOTATIONS: &[&str] = &[
    "$schema",
    "$id",
    "$anchor",
    "$dynamicAnchor",
    "$vocabulary",
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
    "contentMediaType",
    "contentEncoding",
    "contentSchema",
    "$recursiveAnchor",
];

/// Normalizes a parsed document. Drafts missing or unknown in `$schema`
/// default to 2020-12.
pub fn normalize(doc: &SchemaDocument) -> Result<SchemaIR, NormalizeError> {
    let draft = doc.declared_draft.unwrap_or(Draft::Draft2020_12);
    let mut builder = Builder {
        raw: &doc.raw,
        draft,
        nodes: Vec::new(),
        by_pointer: HashMap::new(),
        resources: HashMap::new(),
        anchors: HashMap::new(),
        pending: Vec::new(),
    };
    let base = Url::parse(DEFAULT_BASE).expect("default base parses");
    builder.resources.insert(DEFAULT_BASE.to_string(), String::new());
    let root = builder.build(String::new(), &base)?;
    // Resolving a reference may materialize new nodes, which may carry
    // references of their own.
    while let Some((node, reference, base)) = builder.pending.pop() {
        let target = builder.resolve(&reference, &base)?;
        if let NodeKind::Keywords(k) = &mut builder.nodes[node.index()].kind {
            k.reference = Some(target);
        }
    }

    let mut definitions = Vec::new();
    if let Some(obj) = doc.raw.as_object() {
        for container in ["$defs", "definitions"] {
            if let Some(JsonValue::Object(defs)) = obj.get(container) {
                for name in defs.keys() {
                    let ptr = format!("/{container}/{}", escape_pointer(name));
                    if let Some(id) = builder.by_pointer.get(&ptr) {
                        definitions.push((name.clone(), *id));
                    }
                }
            }
        }
    }

    let mut ir = SchemaIR {
        nodes: builder.nodes,
        root,
        definitions,
        cycles: BTreeSet::new(),
        draft,
        source_id: doc.source_id.clone(),
    };
    ir.cycles = analyze_cycles(&ir)?;
    Ok(ir)
}

struct Builder<'a> {
    raw: &'a JsonValue,
    draft: Draft,
    nodes: Vec<Node>,
    by_pointer: HashMap<String, NodeId>,
    /// Resource URI (no fragment) to the pointer of its root.
    resources: HashMap<String, String>,
    /// (resource URI, anchor name) to pointer.
    anchors: HashMap<(String, String), String>,
    pending: Vec<(NodeId, String, Url)>,
}

impl<'a> Builder<'a> {
    fn invalid(path: &str, keyword: &str, reason: impl Into<String>) -> NormalizeError {
        NormalizeError::InvalidKeyword { path: path.to_string(), keyword: keyword.to_string(), reason: reason.into() }
    }

    fn build(&mut self, pointer: String, base: &Url) -> Result<NodeId, NormalizeError> {
        if let Some(id) = self.by_pointer.get(&pointer) {
            return Ok(*id);
        }
        let raw = self.raw;
        let value = raw
            .pointer(&pointer)
            .ok_or_else(|| NormalizeError::UnresolvedRef(format!("#{pointer}")))?;
        let id = NodeId(self.nodes.len() as u32);
        self.by_pointer.insert(pointer.clone(), id);
        self.nodes.push(Node { location: pointer.clone(), base: base.to_string(), kind: NodeKind::Bool(true) });
        let kind = match value {
            JsonValue::Bool(b) => NodeKind::Bool(*b),
            JsonValue::Object(obj) => {
                let base = self.register_identifiers(obj, &pointer, base)?;
                self.nodes[id.index()].base = base.to_string();
                NodeKind::Keywords(Box::new(self.keywords(id, obj, &pointer, &base)?))
            }
            _ => return Err(Self::invalid(&pointer, "schema", "a schema must be an object or a boolean")),
        };
        self.nodes[id.index()].kind = kind;
        Ok(id)
    }

    fn register_identifiers(&mut self, obj: &Map<String, JsonValue>, pointer: &str, base: &Url) -> Result<Url, NormalizeError> {
        let id_key = if self.draft == Draft::Draft4 { "id" } else { "$id" };
        let mut base = base.clone();
        if let Some(JsonValue::String(id)) = obj.get(id_key) {
            if let Some(anchor) = id.strip_prefix('#') {
                if !anchor.is_empty() && self.draft <= Draft::Draft7 {
                    self.anchors.insert((strip_fragment(&base), anchor.to_string()), pointer.to_string());
                }
            } else {
                base = base.join(id).map_err(|e| Self::invalid(pointer, id_key, e.to_string()))?;
                self.resources.entry(strip_fragment(&base)).or_insert_with(|| pointer.to_string());
            }
        }
        for key in ["$anchor", "$dynamicAnchor"] {
            if let Some(JsonValue::String(anchor)) = obj.get(key) {
                self.anchors.entry((strip_fragment(&base), anchor.clone())).or_insert_with(|| pointer.to_string());
            }
        }
        Ok(base)
    }

    fn resolve(&mut self, reference: &str, base: &Url) -> Result<NodeId, NormalizeError> {
        let url = base.join(reference).map_err(|_| NormalizeError::UnresolvedRef(reference.to_string()))?;
        let resource = strip_fragment(&url);
        let Some(root) = self.resources.get(&resource).cloned() else {
            return Err(NormalizeError::UnresolvedExternalRef(url.to_string()));
        };
        let fragment = url.fragment().map(percent_decode).unwrap_or_default();
        let pointer = if fragment.is_empty() {
            root
        } else if fragment.starts_with('/') {
            format!("{root}{fragment}")
        } else {
            self.anchors
                .get(&(resource, fragment.clone()))
                .cloned()
                .ok_or_else(|| NormalizeError::UnresolvedRef(reference.to_string()))?
        };
        if let Some(id) = self.by_pointer.get(&pointer) {
            return Ok(*id);
        }
        let base = self.base_for(&pointer);
        self.build(pointer, &base)
    }

    /// Base URI of the closest already-built ancestor of `pointer`.
    fn base_for(&self, pointer: &str) -> Url {
        let mut prefix = pointer;
        loop {
            if let Some(id) = self.by_pointer.get(prefix) {
                return Url::parse(&self.nodes[id.index()].base).expect("stored bases parse");
            }
            match prefix.rfind('/') {
                Some(i) => prefix = &prefix[..i],
                None => return Url::parse(DEFAULT_BASE).expect("default base parses"),
            }
        }
    }

    fn child(&mut self, pointer: &str, segments: &[&str], base: &Url) -> Result<NodeId, NormalizeError> {
        let mut p = pointer.to_string();
        for s in segments {
            p.push('/');
            p.push_str(&escape_pointer(s));
        }
        self.build(p, base)
    }

    fn keywords(&mut self, id: NodeId, obj: &Map<String, JsonValue>, ptr: &str, base: &Url) -> Result<Keywords, NormalizeError> {
        let mut k = Keywords::default();
        let legacy = self.draft <= Draft::Draft7;

        if let Some(JsonValue::String(reference)) = obj.get("$ref") {
            self.pending.push((id, reference.clone(), base.clone()));
            // Placeholder until resolution; overwritten before normalize returns.
            k.reference = Some(id);
            if self.draft.ref_overrides_siblings() {
                // Definitions still need nodes so that other references can land there.
                for container in ["definitions", "$defs"] {
                    if let Some(JsonValue::Object(defs)) = obj.get(container) {
                        for name in defs.keys() {
                            self.child(ptr, &[container, name], base)?;
                        }
                    }
                }
                return Ok(k);
            }
        }

        for (key, value) in obj {
            let key = key.as_str();
            match key {
                "type" => k.types = Some(parse_types(ptr, value)?),
                "enum" => match value {
                    JsonValue::Array(items) => k.enum_values = Some(items.clone()),
                    _ => return Err(Self::invalid(ptr, key, "expected an array")),
                },
                "const" => k.const_value = Some(value.clone()),
                "multipleOf" => {
                    let d = decimal(ptr, key, value)?;
                    if d <= Decimal::from_bigint(0.into()) {
                        return Err(Self::invalid(ptr, key, "must be strictly positive"));
                    }
                    k.multiple_of = Some(d);
                }
                "maximum" => k.maximum = Some(decimal(ptr, key, value)?),
                "minimum" => k.minimum = Some(decimal(ptr, key, value)?),
                "exclusiveMaximum" | "exclusiveMinimum" => {
                    // Draft-04 spells these as booleans modifying maximum/minimum.
                    if let JsonValue::Bool(flag) = value {
                        if *flag {
                            let partner = if key == "exclusiveMaximum" { "maximum" } else { "minimum" };
                            if let Some(bound) = obj.get(partner) {
                                let d = decimal(ptr, partner, bound)?;
                                if key == "exclusiveMaximum" {
                                    k.exclusive_maximum = Some(d);
                                } else {
                                    k.exclusive_minimum = Some(d);
                                }
                            }
                        }
                    } else if key == "exclusiveMaximum" {
                        k.exclusive_maximum = Some(decimal(ptr, key, value)?);
                    } else {
                        k.exclusive_minimum = Some(decimal(ptr, key, value)?);
                    }
                }
                "maxLength" => k.max_length = Some(count(ptr, key, value)?),
                "minLength" => k.min_length = Some(count(ptr, key, value)?),
                "pattern" => k.pattern = Some(string(ptr, key, value)?),
                "format" => k.format = Some(string(ptr, key, value)?),
                "prefixItems" => k.prefix_items = Some(self.schema_list(ptr, key, value, base)?),
                "items" => match value {
                    JsonValue::Array(_) => k.prefix_items = Some(self.schema_list(ptr, key, value, base)?),
                    _ => k.items = Some(self.child(ptr, &[key], base)?),
                },
                "additionalItems" => {
                    if matches!(obj.get("items"), Some(JsonValue::Array(_))) {
                        k.items = Some(self.child(ptr, &[key], base)?);
                    }
                }
                "contains" => k.contains = Some(self.child(ptr, &[key], base)?),
                "maxContains" => k.max_contains = Some(count(ptr, key, value)?),
                "minContains" => k.min_contains = Some(count(ptr, key, value)?),
                "maxItems" => k.max_items = Some(count(ptr, key, value)?),
                "minItems" => k.min_items = Some(count(ptr, key, value)?),
                "uniqueItems" => match value {
                    JsonValue::Bool(b) => k.unique_items = *b,
                    _ => return Err(Self::invalid(ptr, key, "expected a boolean")),
                },
                "properties" => k.properties = self.schema_map(ptr, key, value, base)?,
                "patternProperties" => k.pattern_properties = self.schema_map(ptr, key, value, base)?,
                "additionalProperties" => k.additional_properties = Some(self.child(ptr, &[key], base)?),
                "propertyNames" => k.property_names = Some(self.child(ptr, &[key], base)?),
                "required" => {
                    // Draft-03 style `required: true` carries no constraint here.
                    if !value.is_boolean() {
                        k.required = string_list(ptr, key, value)?;
                    }
                }
                "maxProperties" => k.max_properties = Some(count(ptr, key, value)?),
                "minProperties" => k.min_properties = Some(count(ptr, key, value)?),
                "dependentRequired" => {
                    let obj = value.as_object().ok_or_else(|| Self::invalid(ptr, key, "expected an object"))?;
                    for (name, deps) in obj {
                        k.dependent_required.push((name.clone(), string_list(ptr, key, deps)?));
                    }
                }
                "dependentSchemas" => k.dependent_schemas.extend(self.schema_map(ptr, key, value, base)?),
                "dependencies" => {
                    let obj = value.as_object().ok_or_else(|| Self::invalid(ptr, key, "expected an object"))?;
                    for (name, dep) in obj {
                        if dep.is_array() {
                            k.dependent_required.push((name.clone(), string_list(ptr, key, dep)?));
                        } else {
                            let child = self.child(ptr, &[key, name], base)?;
                            k.dependent_schemas.push((name.clone(), child));
                        }
                    }
                }
                "allOf" => k.all_of = Some(self.schema_list(ptr, key, value, base)?),
                "anyOf" => k.any_of = Some(self.schema_list(ptr, key, value, base)?),
                "oneOf" => k.one_of = Some(self.schema_list(ptr, key, value, base)?),
                "not" => k.not = Some(self.child(ptr, &[key], base)?),
                "if" => k.if_schema = Some(self.child(ptr, &[key], base)?),
                "then" => k.then_schema = Some(self.child(ptr, &[key], base)?),
                "else" => k.else_schema = Some(self.child(ptr, &[key], base)?),
                "$ref" => {}
                "$dynamicRef" | "$recursiveRef" => k.dynamic_ref = Some(string(ptr, key, value)?),
                "unevaluatedItems" => k.unevaluated_items = Some(self.child(ptr, &[key], base)?),
                "unevaluatedProperties" => k.unevaluated_properties = Some(self.child(ptr, &[key], base)?),
                "$defs" | "definitions" => {
                    let defs = value.as_object().ok_or_else(|| Self::invalid(ptr, key, "expected an object"))?;
                    for name in defs.keys() {
                        self.child(ptr, &[key, name], base)?;
                    }
                }
                "id" if self.draft == Draft::Draft4 => {}
                _ if ANNOTATIONS.contains(&key) => {}
                _ => k.unknown.push(key.to_string()),
            }
        }
        if legacy && k.items.is_none() && k.prefix_items.is_none() {
            // `additionalItems` without an `items` array has no effect.
        }
        Ok(k)
    }

    fn schema_list(&mut self, ptr: &str, key: &str, value: &JsonValue, base: &Url) -> Result<Vec<NodeId>, NormalizeError> {
        let items = value.as_array().ok_or_else(|| Self::invalid(ptr, key, "expected an array of schemas"))?;
        (0..items.len()).map(|i| self.child(ptr, &[key, &i.to_string()], base)).collect()
    }

    fn schema_map(&mut self, ptr: &str, key: &str, value: &JsonValue, base: &Url) -> Result<Vec<(String, NodeId)>, NormalizeError> {
        let obj = value.as_object().ok_or_else(|| Self::invalid(ptr, key, "expected an object of schemas"))?;
        obj.keys().map(|name| Ok((name.clone(), self.child(ptr, &[key, name], base)?))).collect()
    }
}

fn parse_types(ptr: &str, value: &JsonValue) -> Result<TypeSet, NormalizeError> {
    let one = |v: &JsonValue| -> Result<JsonType, NormalizeError> {
        v.as_str()
            .and_then(JsonType::from_name)
            .ok_or_else(|| Builder::invalid(ptr, "type", format!("unknown type {v}")))
    };
    match value {
        JsonValue::Array(items) => items.iter().map(one).collect(),
        other => Ok(std::iter::once(one(other)?).collect()),
    }
}

fn decimal(ptr: &str, key: &str, value: &JsonValue) -> Result<Decimal, NormalizeError> {
    match value {
        JsonValue::Number(n) => Decimal::from_number(n).ok_or_else(|| Builder::invalid(ptr, key, "unparseable number")),
        _ => Err(Builder::invalid(ptr, key, "expected a number")),
    }
}

fn count(ptr: &str, key: &str, value: &JsonValue) -> Result<u64, NormalizeError> {
    let d = decimal(ptr, key, value)?;
    if !d.is_integer() || d.is_negative() {
        return Err(Builder::invalid(ptr, key, "expected a non-negative integer"));
    }
    Ok(d.to_bigint().and_then(|b| u64::try_from(b).ok()).unwrap_or(u64::MAX))
}

fn string(ptr: &str, key: &str, value: &JsonValue) -> Result<String, NormalizeError> {
    value.as_str().map(str::to_string).ok_or_else(|| Builder::invalid(ptr, key, "expected a string"))
}

fn string_list(ptr: &str, key: &str, value: &JsonValue) -> Result<Vec<String>, NormalizeError> {
    let items = value.as_array().ok_or_else(|| Builder::invalid(ptr, key, "expected an array of strings"))?;
    items.iter().map(|v| string(ptr, key, v)).collect()
}

fn strip_fragment(url: &Url) -> String {
    let mut u = url.clone();
    u.set_fragment(None);
    u.to_string()
}

pub fn escape_pointer(segment: &str) -> String {
    segment.replace('~', "~0").replace('/', "~1")
}

fn percent_decode(s: &str) -> String {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' && i + 2 < bytes.len() {
            if let Ok(b) = u8::from_str_radix(&s[i + 1..i + 3], 16) {
                out.push(b);
                i += 3;
                continue;
            }
        }
        out.push(bytes[i]);
        i += 1;
    }
    String::from_utf8_lossy(&out).into_owned()
}

/// Finds the `$ref` targets that sit on a cycle, and rejects cycles made only
/// of in-place applicators, which would recurse without consuming input.
fn analyze_cycles(ir: &SchemaIR) -> Result<BTreeSet<NodeId>, NormalizeError> {
    let mut full = DiGraph::<NodeId, ()>::new();
    let mut in_place = DiGraph::<NodeId, ()>::new();
    for i in 0..ir.nodes.len() {
        full.add_node(NodeId(i as u32));
        in_place.add_node(NodeId(i as u32));
    }
    let mut ref_targets = BTreeSet::new();
    for (i, node) in ir.nodes.iter().enumerate() {
        if let Some(k) = node.keywords() {
            for (keyword, child) in k.children() {
                let (a, b) = ((i as u32).into(), child.0.into());
                full.add_edge(a, b, ());
                if is_in_place_applicator(keyword) {
                    in_place.add_edge(a, b, ());
                }
                if keyword == "$ref" {
                    ref_targets.insert(child);
                }
            }
        }
    }
    for scc in tarjan_scc(&in_place) {
        let cyclic = scc.len() > 1 || in_place.contains_edge(scc[0], scc[0]);
        if cyclic {
            let id = in_place[scc[0]];
            return Err(NormalizeError::RefCycleTooDeep(format!("#{}", ir.node(id).location)));
        }
    }
    let mut cycles = BTreeSet::new();
    for scc in tarjan_scc(&full) {
        let cyclic = scc.len() > 1 || full.contains_edge(scc[0], scc[0]);
        if cyclic {
            cycles.extend(scc.iter().map(|ix| full[*ix]).filter(|id| ref_targets.contains(id)));
        }
    }
    Ok(cycles)
}
