//! Instance validation against a normalized schema.
//!
//! This is the ground truth the compiled automata are measured against, so it
//! shares no matching code with the compiler: patterns go through the `regex`
//! crate and numbers are compared as exact decimals.

use std::collections::HashMap;

use regex::Regex;
use serde::Serialize;

use super::format::check_format;
use super::ir::{escape_pointer, JsonType, Keywords, NodeId, NodeKind, SchemaIR};
use super::pattern::compile_regex;
use crate::json::{json_equal, Decimal, JsonValue, Map};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub instance_path: String,
    pub keyword: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationOutcome {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidateError {
    #[error("keyword {keyword} at {path} is not supported by the validator")]
    UnsupportedKeyword { keyword: String, path: String },
}

/// A validator bound to one schema, with its patterns compiled up front.
#[derive(Debug)]
pub struct Validator<'a> {
    ir: &'a SchemaIR,
    patterns: HashMap<String, Regex>,
}

/// Validates one instance; convenience wrapper around [`Validator`].
pub fn validate_instance(ir: &SchemaIR, value: &JsonValue) -> Result<ValidationOutcome, ValidateError> {
    Ok(Validator::new(ir)?.validate(value))
}

impl<'a> Validator<'a> {
    pub fn new(ir: &'a SchemaIR) -> Result<Validator<'a>, ValidateError> {
        let mut patterns = HashMap::new();
        for id in ir.reachable() {
            let node = ir.node(id);
            let Some(k) = node.keywords() else { continue };
            let unsupported = |keyword: &str| ValidateError::UnsupportedKeyword {
                keyword: keyword.to_string(),
                path: format!("{}/{keyword}", node.location),
            };
            if k.dynamic_ref.is_some() {
                return Err(unsupported("$dynamicRef"));
            }
            if k.unevaluated_items.is_some() {
                return Err(unsupported("unevaluatedItems"));
            }
            if k.unevaluated_properties.is_some() {
                return Err(unsupported("unevaluatedProperties"));
            }
            let sources = k.pattern.iter().map(|p| ("pattern", p)).chain(k.pattern_properties.iter().map(|(p, _)| ("patternProperties", p)));
            for (keyword, p) in sources {
                if !patterns.contains_key(p) {
                    let re = compile_regex(p).map_err(|_| unsupported(keyword))?;
                    patterns.insert(p.clone(), re);
                }
            }
        }
        Ok(Validator { ir, patterns })
    }

    pub fn ir(&self) -> &SchemaIR {
        self.ir
    }

    pub fn validate(&self, value: &JsonValue) -> ValidationOutcome {
        let mut violations = Vec::new();
        self.check(self.ir.root, value, &mut String::new(), Some(&mut violations), false);
        ValidationOutcome { valid: violations.is_empty(), violations }
    }

    pub fn is_valid(&self, value: &JsonValue) -> bool {
        self.is_valid_at(self.ir.root, value)
    }

    pub fn is_valid_at(&self, node: NodeId, value: &JsonValue) -> bool {
        self.check(node, value, &mut String::new(), None, false)
    }

    /// Validates against a node's own keywords, skipping `$ref`, `allOf`,
    /// `anyOf` and `oneOf`.
    pub fn is_valid_local(&self, node: NodeId, value: &JsonValue) -> bool {
        self.check(node, value, &mut String::new(), None, true)
    }

    fn pattern_matches(&self, pattern: &str, text: &str) -> bool {
        self.patterns.get(pattern).is_some_and(|re| re.is_match(text))
    }

    /// Core check. With `out` set every violation is collected, otherwise
    /// the first failure short-circuits.
    fn check(&self, id: NodeId, value: &JsonValue, path: &mut String, mut out: Option<&mut Vec<Violation>>, local: bool) -> bool {
        let k = match &self.ir.node(id).kind {
            NodeKind::Bool(true) => return true,
            NodeKind::Bool(false) => {
                if let Some(out) = out {
                    out.push(violation(path, "false", "the false schema rejects everything".to_string()));
                }
                return false;
            }
            NodeKind::Keywords(k) => k,
        };
        let mut ok = true;
        macro_rules! fail {
            ($kw:expr, $($msg:tt)*) => {{
                ok = false;
                match out.as_deref_mut() {
                    Some(out) => out.push(violation(path, $kw, format!($($msg)*))),
                    None => return false,
                }
            }};
        }

        if !local {
            if let Some(target) = k.reference {
                if !self.check_nested(target, value, path, &mut out) {
                    fail!("$ref", "does not match the referenced schema");
                }
            }
            for id in k.all_of.iter().flatten() {
                if !self.check_nested(*id, value, path, &mut out) {
                    fail!("allOf", "does not match every allOf subschema");
                }
            }
            if let Some(branches) = &k.any_of {
                if !branches.iter().any(|b| self.is_valid_at(*b, value)) {
                    fail!("anyOf", "matches none of the anyOf subschemas");
                }
            }
            if let Some(branches) = &k.one_of {
                let matched = branches.iter().filter(|b| self.is_valid_at(**b, value)).count();
                if matched != 1 {
                    fail!("oneOf", "matches {matched} oneOf subschemas instead of exactly one");
                }
            }
        }
        if let Some(not) = k.not {
            if self.is_valid_at(not, value) {
                fail!("not", "matches the schema under not");
            }
        }
        if let Some(cond) = k.if_schema {
            let branch = if self.is_valid_at(cond, value) { k.then_schema.map(|t| ("then", t)) } else { k.else_schema.map(|e| ("else", e)) };
            if let Some((kw, target)) = branch {
                if !self.check_nested(target, value, path, &mut out) {
                    fail!(kw, "does not match the {kw} schema");
                }
            }
        }

        if let Some(types) = k.types {
            if !types.iter().any(|t| has_type(value, t)) {
                let names: Vec<_> = types.iter().map(JsonType::name).collect();
                fail!("type", "expected {}", names.join(" or "));
            }
        }
        if let Some(values) = &k.enum_values {
            if !values.iter().any(|v| json_equal(v, value)) {
                fail!("enum", "not one of the enumerated values");
            }
        }
        if let Some(c) = &k.const_value {
            if !json_equal(c, value) {
                fail!("const", "does not equal the constant");
            }
        }

        match value {
            JsonValue::Number(n) => {
                if let Some(d) = Decimal::from_number(n) {
                    for (kw, msg) in numeric_violations(k, &d) {
                        fail!(kw, "{msg}");
                    }
                }
            }
            JsonValue::String(s) => {
                let len = s.chars().count() as u64;
                if k.max_length.is_some_and(|m| len > m) {
                    fail!("maxLength", "longer than {} characters", k.max_length.unwrap());
                }
                if k.min_length.is_some_and(|m| len < m) {
                    fail!("minLength", "shorter than {} characters", k.min_length.unwrap());
                }
                if let Some(p) = &k.pattern {
                    if !self.pattern_matches(p, s) {
                        fail!("pattern", "does not match {p:?}");
                    }
                }
                if let Some(f) = &k.format {
                    if check_format(f, s) == Some(false) {
                        fail!("format", "is not a valid {f}");
                    }
                }
            }
            JsonValue::Array(items) => {
                let prefix = k.prefix_items.as_deref().unwrap_or(&[]);
                for (i, item) in items.iter().enumerate() {
                    let schema = prefix.get(i).copied().or(if i >= prefix.len() { k.items } else { None });
                    if let Some(schema) = schema {
                        let len = path.len();
                        path.push('/');
                        path.push_str(&i.to_string());
                        let good = self.check_nested(schema, item, path, &mut out);
                        path.truncate(len);
                        if !good {
                            ok = false;
                            if out.is_none() {
                                return false;
                            }
                        }
                    }
                }
                if k.max_items.is_some_and(|m| items.len() as u64 > m) {
                    fail!("maxItems", "more than {} items", k.max_items.unwrap());
                }
                if k.min_items.is_some_and(|m| (items.len() as u64) < m) {
                    fail!("minItems", "fewer than {} items", k.min_items.unwrap());
                }
                if k.unique_items {
                    let dup = (0..items.len()).any(|i| (i + 1..items.len()).any(|j| json_equal(&items[i], &items[j])));
                    if dup {
                        fail!("uniqueItems", "items are not unique");
                    }
                }
                if let Some(c) = k.contains {
                    let hits = items.iter().filter(|item| self.is_valid_at(c, item)).count() as u64;
                    let min = k.min_contains.unwrap_or(1);
                    if hits < min {
                        fail!("contains", "only {hits} items match contains, need {min}");
                    }
                    if k.max_contains.is_some_and(|m| hits > m) {
                        fail!("maxContains", "{hits} items match contains");
                    }
                }
            }
            JsonValue::Object(map) => {
                self.check_object(k, map, path, &mut out, &mut ok);
                if !ok && out.is_none() {
                    return false;
                }
            }
            _ => {}
        }
        ok
    }

    fn check_nested(&self, id: NodeId, value: &JsonValue, path: &mut String, out: &mut Option<&mut Vec<Violation>>) -> bool {
        self.check(id, value, path, out.as_deref_mut(), false)
    }

    fn check_object(&self, k: &Keywords, map: &Map<String, JsonValue>, path: &mut String, out: &mut Option<&mut Vec<Violation>>, ok: &mut bool) {
        for (key, value) in map {
            if !*ok && out.is_none() {
                return;
            }
            let mut matched = false;
            let len = path.len();
            path.push('/');
            path.push_str(&escape_pointer(key));
            if let Some((_, schema)) = k.properties.iter().find(|(name, _)| name == key) {
                matched = true;
                if !self.check_nested(*schema, value, path, out) {
                    *ok = false;
                }
            }
            for (pattern, schema) in &k.pattern_properties {
                if self.pattern_matches(pattern, key) {
                    matched = true;
                    if !self.check_nested(*schema, value, path, out) {
                        *ok = false;
                    }
                }
            }
            if !matched {
                if let Some(schema) = k.additional_properties {
                    if !self.check_nested(schema, value, path, out) {
                        *ok = false;
                    }
                }
            }
            path.truncate(len);
            if let Some(names) = k.property_names {
                if !self.is_valid_at(names, &JsonValue::String(key.clone())) {
                    record(ok, out, path, "propertyNames", format!("property name {key:?} is not allowed"));
                }
            }
        }
        for name in &k.required {
            if !map.contains_key(name) {
                record(ok, out, path, "required", format!("missing required property {name:?}"));
            }
        }
        let count = map.len() as u64;
        if k.max_properties.is_some_and(|m| count > m) {
            record(ok, out, path, "maxProperties", format!("more than {} properties", k.max_properties.unwrap()));
        }
        if k.min_properties.is_some_and(|m| count < m) {
            record(ok, out, path, "minProperties", format!("fewer than {} properties", k.min_properties.unwrap()));
        }
        for (trigger, deps) in &k.dependent_required {
            if map.contains_key(trigger) {
                for dep in deps {
                    if !map.contains_key(dep) {
                        record(ok, out, path, "dependentRequired", format!("{trigger:?} requires {dep:?}"));
                    }
                }
            }
        }
        let object = JsonValue::Object(map.clone());
        for (trigger, schema) in &k.dependent_schemas {
            if map.contains_key(trigger) && !self.check_nested(*schema, &object, path, out) {
                record(ok, out, path, "dependentSchemas", format!("{trigger:?} brings a schema that does not match"));
            }
        }
    }
}

fn record(ok: &mut bool, out: &mut Option<&mut Vec<Violation>>, path: &str, keyword: &str, message: String) {
    *ok = false;
    if let Some(out) = out.as_deref_mut() {
        out.push(violation(path, keyword, message));
    }
}

fn violation(path: &str, keyword: &str, message: String) -> Violation {
    Violation { instance_path: path.to_string(), keyword: keyword.to_string(), message }
}

pub fn has_type(value: &JsonValue, t: JsonType) -> bool {
    match (t, value) {
        (JsonType::Null, JsonValue::Null) => true,
        (JsonType::Boolean, JsonValue::Bool(_)) => true,
        (JsonType::Number, JsonValue::Number(_)) => true,
        (JsonType::Integer, JsonValue::Number(n)) => Decimal::from_number(n).is_some_and(|d| d.is_integer()),
        (JsonType::String, JsonValue::String(_)) => true,
        (JsonType::Array, JsonValue::Array(_)) => true,
        (JsonType::Object, JsonValue::Object(_)) => true,
        _ => false,
    }
}

fn numeric_violations(k: &Keywords, d: &Decimal) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();
    if let Some(m) = &k.maximum {
        if d > m {
            out.push(("maximum", format!("greater than {m}")));
        }
    }
    if let Some(m) = &k.exclusive_maximum {
        if d >= m {
            out.push(("exclusiveMaximum", format!("not less than {m}")));
        }
    }
    if let Some(m) = &k.minimum {
        if d < m {
            out.push(("minimum", format!("less than {m}")));
        }
    }
    if let Some(m) = &k.exclusive_minimum {
        if d <= m {
            out.push(("exclusiveMinimum", format!("not greater than {m}")));
        }
    }
    if let Some(m) = &k.multiple_of {
        let multiple = d.is_multiple_of(m).unwrap_or_else(|| {
            let (x, y) = (d.to_string().parse::<f64>().unwrap_or(f64::NAN), m.to_string().parse::<f64>().unwrap_or(f64::NAN));
            (x / y).is_finite() && (x / y).fract() == 0.0
        });
        if !multiple {
            out.push(("multipleOf", format!("not a multiple of {m}")));
        }
    }
    out
}
