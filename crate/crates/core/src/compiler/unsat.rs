//! Syntactic unsatisfiability checks.
//!
//! Only looks at the conjunction of the root and whatever `allOf` and
//! `$ref` pull in, so a `true` answer is always a proof.

use num_bigint::BigInt;

use crate::json::{Decimal, JsonValue};
use crate::schema::{has_type, JsonType, Keywords, NodeId, NodeKind, SchemaIR, TypeSet, Validator};

/// True only when the schema provably admits no instance. False means
/// "unknown".
pub fn detect_unsatisfiable(ir: &SchemaIR) -> bool {
    let mut nodes = Vec::new();
    let mut stack = vec![ir.root];
    while let Some(id) = stack.pop() {
        if nodes.contains(&id) {
            continue;
        }
        match &ir.node(id).kind {
            NodeKind::Bool(false) => return true,
            NodeKind::Bool(true) => continue,
            NodeKind::Keywords(k) => {
                nodes.push(id);
                stack.extend(k.all_of.iter().flatten().copied());
                stack.extend(k.reference);
            }
        }
    }
    let kws: Vec<(NodeId, &Keywords)> = nodes.iter().filter_map(|id| ir.node(*id).keywords().map(|k| (*id, k))).collect();
    let types = kws.iter().filter_map(|(_, k)| k.types).fold(TypeSet::all(), TypeSet::intersect);
    if types.is_empty() {
        return true;
    }
    if literals_exhausted(ir, &kws, types) {
        return true;
    }
    let only = |allowed: &[JsonType]| types.iter().all(|t| allowed.contains(&t));
    if only(&[JsonType::Integer, JsonType::Number]) && numeric_bounds_cross(&kws, types.number_kind() == Some(true)) {
        return true;
    }
    let crossed = |lo: Option<u64>, hi: Option<u64>| matches!((lo, hi), (Some(l), Some(h)) if l > h);
    let max_of = |f: fn(&Keywords) -> Option<u64>| kws.iter().filter_map(|(_, k)| f(k)).max();
    let min_of = |f: fn(&Keywords) -> Option<u64>| kws.iter().filter_map(|(_, k)| f(k)).min();
    (only(&[JsonType::String]) && crossed(max_of(|k| k.min_length), min_of(|k| k.max_length)))
        || (only(&[JsonType::Array]) && crossed(max_of(|k| k.min_items), min_of(|k| k.max_items)))
        || (only(&[JsonType::Object]) && crossed(max_of(|k| k.min_properties), min_of(|k| k.max_properties)))
}

/// `const`/`enum` values all fail the other keywords.
fn literals_exhausted(ir: &SchemaIR, kws: &[(NodeId, &Keywords)], types: TypeSet) -> bool {
    let mut listed: Vec<&JsonValue> = Vec::new();
    let mut any = false;
    for (_, k) in kws {
        let values: Vec<&JsonValue> = match (&k.const_value, &k.enum_values) {
            (Some(c), _) => vec![c],
            (None, Some(e)) => e.iter().collect(),
            (None, None) => continue,
        };
        if any {
            listed.retain(|v| values.iter().any(|w| crate::json::json_equal(v, w)));
        } else {
            listed = values;
            any = true;
        }
    }
    if !any {
        return false;
    }
    let Ok(validator) = Validator::new(ir) else {
        // Without a validator only the type test is available.
        return listed.iter().all(|v| !types.iter().any(|t| has_type(v, t)));
    };
    listed.iter().all(|v| !types.iter().any(|t| has_type(v, t)) || kws.iter().any(|(id, _)| !validator.is_valid_local(*id, v)))
}

fn numeric_bounds_cross(kws: &[(NodeId, &Keywords)], integer_only: bool) -> bool {
    let mut lo: Option<(Decimal, bool)> = None;
    let mut hi: Option<(Decimal, bool)> = None;
    let tighter_lo = |cur: Option<(Decimal, bool)>, new: (Decimal, bool)| match cur {
        Some(c) if c.0 > new.0 || (c.0 == new.0 && c.1) => Some(c),
        _ => Some(new),
    };
    let tighter_hi = |cur: Option<(Decimal, bool)>, new: (Decimal, bool)| match cur {
        Some(c) if c.0 < new.0 || (c.0 == new.0 && c.1) => Some(c),
        _ => Some(new),
    };
    for (_, k) in kws {
        if let Some(m) = &k.minimum {
            lo = tighter_lo(lo, (m.clone(), false));
        }
        if let Some(m) = &k.exclusive_minimum {
            lo = tighter_lo(lo, (m.clone(), true));
        }
        if let Some(m) = &k.maximum {
            hi = tighter_hi(hi, (m.clone(), false));
        }
        if let Some(m) = &k.exclusive_maximum {
            hi = tighter_hi(hi, (m.clone(), true));
        }
    }
    let (Some((l, lx)), Some((h, hx))) = (lo, hi) else { return false };
    if integer_only {
        let least: Option<BigInt> = if lx { l.floor().map(|f| f + 1) } else { l.ceil() };
        let most: Option<BigInt> = if hx { h.ceil().map(|c| c - 1) } else { h.floor() };
        if let (Some(a), Some(b)) = (least, most) {
            return a > b;
        }
    }
    l > h || (l == h && (lx || hx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{normalize, parse_schema};

    fn unsat(text: &str) -> bool {
        detect_unsatisfiable(&normalize(&parse_schema(text.as_bytes()).unwrap()).unwrap())
    }

    #[test]
    fn contradictions_are_found() {
        assert!(unsat("false"));
        assert!(unsat(r#"{"allOf":[{"type":"string"},{"type":"integer"}]}"#));
        assert!(unsat(r#"{"minimum":5,"maximum":3,"type":"integer"}"#));
        assert!(unsat(r#"{"type":"integer","exclusiveMinimum":2.5,"maximum":3.5,"multipleOf":1,"exclusiveMaximum":3}"#));
        assert!(unsat(r#"{"const":"a","type":"integer"}"#));
        assert!(unsat(r#"{"enum":["ab","abc"],"maxLength":1}"#));
        assert!(unsat(r#"{"type":"string","minLength":3,"maxLength":2}"#));
        assert!(unsat(r##"{"$ref":"#/$defs/n","$defs":{"n":{"type":"null"}},"type":"boolean"}"##));
    }

    #[test]
    fn satisfiable_or_unknown_schemas_are_not_flagged() {
        assert!(!unsat("true"));
        assert!(!unsat(r#"{"type":"integer","minimum":3,"maximum":3}"#));
        assert!(!unsat(r#"{"minimum":5,"maximum":3}"#));
        assert!(!unsat(r#"{"anyOf":[{"type":"string"},{"type":"integer"}]}"#));
        assert!(!unsat(r#"{"type":"number","exclusiveMinimum":2.5,"exclusiveMaximum":3}"#));
        assert!(!unsat(r#"{"enum":[1,"a"],"type":"string"}"#));
    }
}
