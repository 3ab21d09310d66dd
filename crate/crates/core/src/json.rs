//! JSON values, exact decimal numbers and the canonical compact serializer.
//!
//! Values are `serde_json::Value` built with `preserve_order` and
//! `arbitrary_precision`, so object key order survives a round trip and number
//! literals keep their exact text. [`Decimal`] gives those literals exact
//! arithmetic for comparisons and `multipleOf`.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::de::{self, Deserialize, Deserializer, MapAccess, SeqAccess, Visitor};

pub use serde_json::{Map, Number, Value as JsonValue};

/// Error raised while parsing JSON text.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum JsonError {
    #[error("malformed JSON at byte {offset}: {message}")]
    Malformed { offset: usize, message: String },
    #[error("duplicate object key {key:?}")]
    DuplicateKey { key: String },
}

impl JsonError {
    /// Byte offset of a syntax error; duplicate-key errors report `None`.
    pub fn offset(&self) -> Option<usize> {
        match self {
            JsonError::Malformed { offset, .. } => Some(*offset),
            JsonError::DuplicateKey { .. } => None,
        }
    }
}

/// Parses JSON text, rejecting duplicate object keys.
pub fn parse_json(bytes: &[u8]) -> Result<JsonValue, JsonError> {
    let value: JsonValue = serde_json::from_slice(bytes).map_err(|e| JsonError::Malformed {
        offset: byte_offset(bytes, e.line(), e.column()),
        message: strip_position(&e.to_string()),
    })?;
    // Second pass over the already-validated text only looks for repeated keys.
    if let Err(e) = serde_json::from_slice::<DuplicateCheck>(bytes) {
        let message = e.to_string();
        let key = message
            .strip_prefix(DUPLICATE_PREFIX)
            .map(|rest| rest.split(" at line").next().unwrap_or(rest).to_string())
            .unwrap_or(message);
        return Err(JsonError::DuplicateKey { key });
    }
    Ok(value)
}

fn strip_position(message: &str) -> String {
    message.split(" at line").next().unwrap_or(message).to_string()
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut current = 1;
    let mut start = 0;
    for (i, b) in bytes.iter().enumerate() {
        if current == line {
            break;
        }
        if *b == b'\n' {
            current += 1;
            start = i + 1;
        }
    }
    (start + column.saturating_sub(1)).min(bytes.len())
}

const DUPLICATE_PREFIX: &str = "duplicate key ";

struct DuplicateCheck;

impl<'de> Deserialize<'de> for DuplicateCheck {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(DuplicateVisitor)
    }
}

struct DuplicateVisitor;

impl<'de> Visitor<'de> for DuplicateVisitor {
    type Value = DuplicateCheck;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("any JSON value")
    }

    fn visit_bool<E>(self, _: bool) -> Result<DuplicateCheck, E> {
        Ok(DuplicateCheck)
    }
    fn visit_i64<E>(self, _: i64) -> Result<DuplicateCheck, E> {
        Ok(DuplicateCheck)
    }
    fn visit_u64<E>(self, _: u64) -> Result<DuplicateCheck, E> {
        Ok(DuplicateCheck)
    }
    fn visit_f64<E>(self, _: f64) -> Result<DuplicateCheck, E> {
        Ok(DuplicateCheck)
    }
    fn visit_str<E>(self, _: &str) -> Result<DuplicateCheck, E> {
        Ok(DuplicateCheck)
    }
    fn visit_unit<E>(self) -> Result<DuplicateCheck, E> {
        Ok(DuplicateCheck)
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<DuplicateCheck, A::Error> {
        while seq.next_element::<DuplicateCheck>()?.is_some() {}
        Ok(DuplicateCheck)
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<DuplicateCheck, A::Error> {
        let mut seen = HashSet::new();
        while let Some(key) = map.next_key::<String>()? {
            if !seen.insert(key.clone()) {
                return Err(de::Error::custom(format!("{DUPLICATE_PREFIX}{key}")));
            }
            map.next_value::<DuplicateCheck>()?;
        }
        Ok(DuplicateCheck)
    }
}

/// Serializes a value in canonical compact form: no insignificant whitespace,
/// keys in their original order, integers verbatim and other numbers in
/// shortest round-trip form.
pub fn to_canonical_string(value: &JsonValue) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

fn write_canonical(value: &JsonValue, out: &mut String) {
    match value {
        JsonValue::Null => out.push_str("null"),
        JsonValue::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        JsonValue::Number(n) => out.push_str(&canonical_number(&n.to_string())),
        JsonValue::String(s) => write_string(s, out),
        JsonValue::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        JsonValue::Object(map) => {
            out.push('{');
            for (i, (k, v)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_string(k, out);
                out.push(':');
                write_canonical(v, out);
            }
            out.push('}');
        }
    }
}

fn write_string(s: &str, out: &mut String) {
    out.push_str(&serde_json::to_string(s).expect("string serialization is infallible"));
}

/// Canonical spelling of a JSON number literal.
pub fn canonical_number(text: &str) -> String {
    if !text.contains(['.', 'e', 'E']) {
        return text.to_string();
    }
    match text.parse::<f64>() {
        Ok(f) if f.is_finite() => format!("{f:?}"),
        _ => text.to_string(),
    }
}

/// Canonical form with object keys sorted recursively; two values are equal
/// up to key order iff their sorted forms are equal.
pub fn to_sorted_string(value: &JsonValue) -> String {
    fn sorted(value: &JsonValue) -> JsonValue {
        match value {
            JsonValue::Array(items) => JsonValue::Array(items.iter().map(sorted).collect()),
            JsonValue::Object(map) => {
                let mut entries: Vec<_> = map.iter().collect();
                entries.sort_by(|a, b| a.0.cmp(b.0));
                JsonValue::Object(entries.into_iter().map(|(k, v)| (k.clone(), sorted(v))).collect())
            }
            other => other.clone(),
        }
    }
    to_canonical_string(&sorted(value))
}

/// JSON Schema equality: numbers compare by value, objects ignore key order.
pub fn json_equal(a: &JsonValue, b: &JsonValue) -> bool {
    match (a, b) {
        (JsonValue::Number(x), JsonValue::Number(y)) => {
            match (Decimal::from_number(x), Decimal::from_number(y)) {
                (Some(x), Some(y)) => x == y,
                _ => x.to_string() == y.to_string(),
            }
        }
        (JsonValue::Array(x), JsonValue::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(a, b)| json_equal(a, b))
        }
        (JsonValue::Object(x), JsonValue::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| json_equal(v, w)))
        }
        _ => a == b,
    }
}

/// Largest decimal exponent gap [`Decimal::is_multiple_of`] will expand.
const MAX_EXPONENT_SPREAD: i64 = 4096;

/// An exact decimal number `mantissa * 10^exponent`, kept normalized so that
/// the mantissa has no trailing zeros (zero is `0 * 10^0`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Decimal {
    mantissa: BigInt,
    exponent: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a JSON number: {0:?}")]
pub struct DecimalParseError(String);

impl Decimal {
    pub fn from_number(n: &Number) -> Option<Decimal> {
        n.to_string().parse().ok()
    }

    pub fn from_bigint(value: BigInt) -> Decimal {
        Decimal::new(value, 0)
    }

    fn new(mut mantissa: BigInt, mut exponent: i64) -> Decimal {
        if mantissa.is_zero() {
            return Decimal { mantissa, exponent: 0 };
        }
        let ten = BigInt::from(10);
        loop {
            let (q, r) = mantissa.div_rem(&ten);
            if !r.is_zero() {
                break;
            }
            mantissa = q;
            exponent += 1;
        }
        Decimal { mantissa, exponent }
    }

    pub fn is_integer(&self) -> bool {
        self.exponent >= 0
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    /// The integer value, if this number is integral and its magnitude is
    /// representable without absurd expansion.
    pub fn to_bigint(&self) -> Option<BigInt> {
        if self.exponent < 0 || self.exponent > MAX_EXPONENT_SPREAD {
            return None;
        }
        Some(&self.mantissa * BigInt::from(10).pow(self.exponent as u32))
    }

    /// Smallest integer greater than or equal to this number.
    pub fn ceil(&self) -> Option<BigInt> {
        if self.exponent >= 0 {
            return self.to_bigint();
        }
        let scale = -self.exponent;
        if scale > MAX_EXPONENT_SPREAD {
            return None;
        }
        let divisor = BigInt::from(10).pow(scale as u32);
        Some(self.mantissa.div_ceil(&divisor))
    }

    /// Largest integer less than or equal to this number.
    pub fn floor(&self) -> Option<BigInt> {
        if self.exponent >= 0 {
            return self.to_bigint();
        }
        let scale = -self.exponent;
        if scale > MAX_EXPONENT_SPREAD {
            return None;
        }
        let divisor = BigInt::from(10).pow(scale as u32);
        Some(self.mantissa.div_floor(&divisor))
    }

    /// Exact `self / divisor` integrality test. Returns `None` when the
    /// exponents are too far apart to expand.
    pub fn is_multiple_of(&self, divisor: &Decimal) -> Option<bool> {
        if divisor.is_zero() {
            return Some(false);
        }
        if self.is_zero() {
            return Some(true);
        }
        let common = self.exponent.min(divisor.exponent);
        let spread = (self.exponent - common).max(divisor.exponent - common);
        if spread > MAX_EXPONENT_SPREAD {
            return None;
        }
        let ten = BigInt::from(10);
        let a = &self.mantissa * ten.pow((self.exponent - common) as u32);
        let b = &divisor.mantissa * ten.pow((divisor.exponent - common) as u32);
        Some((a % b).is_zero())
    }

    /// Numerator `p` of this number written as a reduced fraction `p/q`.
    /// An integer is a multiple of `p/q` exactly when it is a multiple of `p`.
    pub fn reduced_numerator(&self) -> Option<BigInt> {
        if self.exponent >= 0 {
            return self.to_bigint().map(|b| b.abs());
        }
        let scale = -self.exponent;
        if scale > MAX_EXPONENT_SPREAD {
            return None;
        }
        let denominator = BigInt::from(10).pow(scale as u32);
        let g = self.mantissa.gcd(&denominator);
        Some((&self.mantissa / g).abs())
    }

    /// Positional notation without an exponent, e.g. `-12.5` or `300`.
    /// Returns `None` when that would need more than `max_digits` digits.
    pub fn to_plain_string(&self, max_digits: usize) -> Option<String> {
        let digits = self.mantissa.magnitude().to_string();
        let sign = if self.is_negative() { "-" } else { "" };
        if self.exponent >= 0 {
            if digits.len() + self.exponent as usize > max_digits {
                return None;
            }
            let zeros = if self.is_zero() { 0 } else { self.exponent as usize };
            return Some(format!("{sign}{digits}{}", "0".repeat(zeros)));
        }
        let scale = (-self.exponent) as usize;
        if scale.max(digits.len()) + 1 > max_digits {
            return None;
        }
        let padded = format!("{}{digits}", "0".repeat((scale + 1).saturating_sub(digits.len())));
        let (int_part, frac_part) = padded.split_at(padded.len() - scale);
        Some(format!("{sign}{int_part}.{frac_part}"))
    }

    fn digits(&self) -> usize {
        self.mantissa.magnitude().to_string().len()
    }
}

impl FromStr for Decimal {
    type Err = DecimalParseError;

    fn from_str(text: &str) -> Result<Decimal, DecimalParseError> {
        let err = || DecimalParseError(text.to_string());
        let (negative, rest) = match text.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, text),
        };
        let (number, exp) = match rest.find(['e', 'E']) {
            Some(i) => {
                let e: i64 = rest[i + 1..].trim_start_matches('+').parse().map_err(|_| err())?;
                (&rest[..i], e)
            }
            None => (rest, 0),
        };
        let (int_part, frac_part) = match number.find('.') {
            Some(i) => (&number[..i], &number[i + 1..]),
            None => (number, ""),
        };
        if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        if !frac_part.bytes().all(|b| b.is_ascii_digit()) || (number.contains('.') && frac_part.is_empty()) {
            return Err(err());
        }
        let digits = format!("{int_part}{frac_part}");
        let magnitude = BigInt::parse_bytes(digits.as_bytes(), 10).ok_or_else(err)?;
        let mantissa = if negative { -magnitude } else { magnitude };
        Ok(Decimal::new(mantissa, exp - frac_part.len() as i64))
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Decimal) -> Ordering {
        let (sa, sb) = (self.mantissa.sign(), other.mantissa.sign());
        if sa != sb {
            let rank = |s: Sign| match s {
                Sign::Minus => 0,
                Sign::NoSign => 1,
                Sign::Plus => 2,
            };
            return rank(sa).cmp(&rank(sb));
        }
        if sa == Sign::NoSign {
            return Ordering::Equal;
        }
        // Compare magnitudes by order of magnitude first so huge exponents
        // never need expanding.
        let mag_a = self.digits() as i64 + self.exponent;
        let mag_b = other.digits() as i64 + other.exponent;
        let ordering = if mag_a != mag_b {
            mag_a.cmp(&mag_b)
        } else {
            let common = self.exponent.min(other.exponent);
            let ten = BigInt::from(10);
            let a = self.mantissa.magnitude() * ten.magnitude().pow((self.exponent - common) as u32);
            let b = other.mantissa.magnitude() * ten.magnitude().pow((other.exponent - common) as u32);
            a.cmp(&b)
        };
        if sa == Sign::Minus {
            ordering.reverse()
        } else {
            ordering
        }
    }
}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Decimal) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        if self.exponent == 0 {
            write!(f, "{}", self.mantissa)
        } else {
            write!(f, "{}e{}", self.mantissa, self.exponent)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> Decimal {
        s.parse().unwrap()
    }

    #[test]
    fn decimal_equality_ignores_spelling() {
        assert_eq!(d("1"), d("1.0"));
        assert_eq!(d("1e2"), d("100"));
        assert_eq!(d("-0.0"), d("0"));
        assert!(d("1.0").is_integer());
        assert!(!d("1.5").is_integer());
    }

    #[test]
    fn decimal_ordering_is_exact() {
        assert!(d("0.1") < d("0.10000000000000001"));
        assert!(d("-5") < d("-4.9"));
        assert!(d("1e300") > d("9.99e299"));
        assert!(d("-1e300") < d("-9.99e299"));
        assert!(d("1e-300") > d("0"));
    }

    #[test]
    fn multiple_of_is_exact_for_decimals() {
        assert_eq!(d("0.3").is_multiple_of(&d("0.1")), Some(true));
        assert_eq!(d("0.35").is_multiple_of(&d("0.1")), Some(false));
        assert_eq!(d("19.99").is_multiple_of(&d("0.01")), Some(true));
        assert_eq!(d("7").is_multiple_of(&d("2")), Some(false));
    }

    #[test]
    fn plain_spelling_and_numerators() {
        assert_eq!(d("1e2").to_plain_string(20).as_deref(), Some("100"));
        assert_eq!(d("-0.05").to_plain_string(20).as_deref(), Some("-0.05"));
        assert_eq!(d("12.5").to_plain_string(20).as_deref(), Some("12.5"));
        assert_eq!(d("0").to_plain_string(20).as_deref(), Some("0"));
        assert_eq!(d("1e30").to_plain_string(10), None);
        assert_eq!(d("0.5").reduced_numerator(), Some(BigInt::from(1)));
        assert_eq!(d("1.5").reduced_numerator(), Some(BigInt::from(3)));
        assert_eq!(d("4").reduced_numerator(), Some(BigInt::from(4)));
    }

    #[test]
    fn floor_and_ceil() {
        assert_eq!(d("2.5").floor(), Some(BigInt::from(2)));
        assert_eq!(d("2.5").ceil(), Some(BigInt::from(3)));
        assert_eq!(d("-2.5").floor(), Some(BigInt::from(-3)));
        assert_eq!(d("-2.5").ceil(), Some(BigInt::from(-2)));
    }

    #[test]
    fn strict_parse_reports_offsets_and_duplicates() {
        let err = parse_json(b"{\"a\": tru}").unwrap_err();
        assert!(matches!(err, JsonError::Malformed { .. }));
        assert!(err.offset().unwrap() >= 6);
        let err = parse_json(br#"{"a":1,"a":2}"#).unwrap_err();
        assert_eq!(err, JsonError::DuplicateKey { key: "a".into() });
        assert!(parse_json(br#"{"a":{"b":1},"b":{"b":2}}"#).is_ok());
    }

    #[test]
    fn canonical_form_is_compact_and_order_preserving() {
        let v = parse_json(br#"{ "z": [1, 2.50, 1e2], "a": "x\ny" }"#).unwrap();
        assert_eq!(to_canonical_string(&v), r#"{"z":[1,2.5,100.0],"a":"x\ny"}"#);
        let w = parse_json(br#"{"a":"x\ny","z":[1,2.5,100.0]}"#).unwrap();
        assert_eq!(to_sorted_string(&v), to_sorted_string(&w));
    }

    #[test]
    fn large_integers_survive() {
        let v = parse_json(b"123456789012345678901234567890").unwrap();
        assert_eq!(to_canonical_string(&v), "123456789012345678901234567890");
    }

    proptest::proptest! {
        #[test]
        fn serialize_parse_identity(v in arb_json()) {
            let text = to_canonical_string(&v);
            let back = parse_json(text.as_bytes()).unwrap();
            proptest::prop_assert_eq!(to_canonical_string(&back), text);
            proptest::prop_assert!(json_equal(&back, &v));
        }
    }

    fn arb_json() -> impl proptest::strategy::Strategy<Value = JsonValue> {
        use proptest::prelude::*;
        let leaf = prop_oneof![
            Just(JsonValue::Null),
            any::<bool>().prop_map(JsonValue::Bool),
            any::<i64>().prop_map(JsonValue::from),
            (-1e6f64..1e6).prop_map(|f| serde_json::from_str(&format!("{f:?}")).unwrap()),
            "[a-z\\n\"\\\\é]{0,6}".prop_map(JsonValue::String),
        ];
        leaf.prop_recursive(3, 24, 4, |inner| {
            prop_oneof![
                proptest::collection::vec(inner.clone(), 0..4).prop_map(JsonValue::Array),
                proptest::collection::btree_map("[a-c]{1,2}", inner, 0..4)
                    .prop_map(|m| JsonValue::Object(m.into_iter().collect())),
            ]
        })
    }
}
