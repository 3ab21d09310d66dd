//! Number-literal automata: the JSON number grammar, integer ranges built
//! digit by digit, divisibility by residue tracking, and literal value sets.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use super::dfa::{Anchoring, Dfa, DfaBuilder, DfaError};
use crate::json::Decimal;

pub const JSON_NUMBER: &str = r"-?(0|[1-9][0-9]*)(\.[0-9]+)?([eE][+-]?[0-9]+)?";
pub const JSON_INTEGER: &str = r"-?(0|[1-9][0-9]*)";

/// Widest bound, in digits, the range construction will spell out.
const MAX_BOUND_DIGITS: usize = 400;
/// Largest divisor tracked by a residue automaton.
pub const MAX_DIVISOR: u32 = 4096;

pub fn json_number() -> Dfa {
    Dfa::from_regex(JSON_NUMBER, Anchoring::Full).expect("static regex")
}

pub fn json_integer() -> Dfa {
    Dfa::from_regex(JSON_INTEGER, Anchoring::Full).expect("static regex")
}

/// Integer spellings (no fraction, no exponent) whose value lies in
/// `[lo, hi]`; either bound may be open.
pub fn integer_range(lo: Option<&BigInt>, hi: Option<&BigInt>) -> Result<Dfa, DfaError> {
    let regex = integer_range_regex(lo, hi)?;
    match regex {
        None => Ok(Dfa::empty()),
        Some(r) => Dfa::from_regex(&r, Anchoring::Full),
    }
}

fn integer_range_regex(lo: Option<&BigInt>, hi: Option<&BigInt>) -> Result<Option<String>, DfaError> {
    for b in [lo, hi].into_iter().flatten() {
        if b.abs().to_string().len() > MAX_BOUND_DIGITS {
            return Err(DfaError::TooLarge(MAX_BOUND_DIGITS));
        }
    }
    if let (Some(l), Some(h)) = (lo, hi) {
        if l > h {
            return Ok(None);
        }
    }
    let zero = BigInt::zero();
    let one = BigInt::from(1);
    let mut alternatives = Vec::new();
    // Non-negative part: [max(lo, 0), hi].
    let nonneg_lo = match lo {
        Some(l) if l > &zero => l.clone(),
        _ => zero.clone(),
    };
    if hi.is_none_or(|h| h >= &nonneg_lo) {
        alternatives.push(magnitude_regex(&nonneg_lo, hi));
    }
    // Negative part: values in [lo, min(hi, -1)], spelled as magnitudes.
    let neg_hi = match hi {
        Some(h) if h < &-&one => h.clone(),
        _ => -&one,
    };
    if lo.is_none_or(|l| l <= &neg_hi) {
        let mag_lo = -&neg_hi;
        let mag_hi = lo.map(|l| -l);
        alternatives.push(format!("-(?:{})", magnitude_regex(&mag_lo, mag_hi.as_ref())));
    }
    if lo.is_none_or(|l| l <= &zero) && hi.is_none_or(|h| h >= &zero) {
        alternatives.push("-0".to_string());
    }
    if alternatives.is_empty() {
        return Ok(None);
    }
    Ok(Some(alternatives.iter().map(|a| format!("(?:{a})")).collect::<Vec<_>>().join("|")))
}

/// Canonical decimal spellings of the integers in `[lo, hi]`, `lo >= 0`.
fn magnitude_regex(lo: &BigInt, hi: Option<&BigInt>) -> String {
    let lo_s = lo.to_string();
    let mut parts = Vec::new();
    let (max_len, hi_s) = match hi {
        Some(h) => (h.to_string().len(), Some(h.to_string())),
        None => (lo_s.len(), None),
    };
    for len in lo_s.len()..=max_len {
        let band_lo = if len == lo_s.len() { lo_s.clone() } else if len == 1 { "0".to_string() } else { format!("1{}", "0".repeat(len - 1)) };
        let band_hi = match &hi_s {
            Some(h) if h.len() == len => h.clone(),
            _ => "9".repeat(len),
        };
        if band_lo.len() == len && band_lo <= band_hi {
            parts.push(fixed_width(band_lo.as_bytes(), band_hi.as_bytes()));
        }
    }
    if hi.is_none() {
        parts.push(format!("[1-9][0-9]{{{},}}", lo_s.len()));
    }
    parts.join("|")
}

/// Digit strings of one width between `lo` and `hi` inclusive.
fn fixed_width(lo: &[u8], hi: &[u8]) -> String {
    if lo.is_empty() {
        return String::new();
    }
    if lo[0] == hi[0] {
        return format!("{}{}", lo[0] as char, fixed_width(&lo[1..], &hi[1..]));
    }
    let rest = lo.len() - 1;
    let all = |s: &[u8], d: u8| s.iter().all(|&c| c == d);
    if all(&lo[1..], b'0') && all(&hi[1..], b'9') {
        return format!("[{}-{}][0-9]{{{rest}}}", lo[0] as char, hi[0] as char);
    }
    let mut alts = Vec::new();
    alts.push(format!("{}(?:{})", lo[0] as char, fixed_width(&lo[1..], "9".repeat(rest).as_bytes())));
    if hi[0] - lo[0] > 1 {
        alts.push(format!("[{}-{}][0-9]{{{rest}}}", (lo[0] + 1) as char, (hi[0] - 1) as char));
    }
    alts.push(format!("{}(?:{})", hi[0] as char, fixed_width("0".repeat(rest).as_bytes(), &hi[1..])));
    format!("(?:{})", alts.join("|"))
}

/// Integer spellings whose value is divisible by `divisor`.
pub fn multiples_of(divisor: &BigInt) -> Result<Dfa, DfaError> {
    let m = divisor.to_u32().filter(|m| (1..=MAX_DIVISOR).contains(m)).ok_or(DfaError::TooLarge(MAX_DIVISOR as usize))?;
    let mut b = DfaBuilder::new();
    let start = b.add_state(false);
    let minus = b.add_state(false);
    let zero = b.add_state(true);
    let residues: Vec<u32> = (0..m).map(|r| b.add_state(r == 0)).collect();
    for from in [start, minus] {
        b.set(from, b'0', zero);
        for d in 1..=9u32 {
            b.set(from, b'0' + d as u8, residues[(d % m) as usize]);
        }
    }
    b.set(start, b'-', minus);
    for r in 0..m {
        for d in 0..=9u32 {
            let next = (r as u64 * 10 + d as u64) % m as u64;
            b.set(residues[r as usize], b'0' + d as u8, residues[next as usize]);
        }
    }
    Ok(b.finish(start).trim())
}

/// Spellings of exactly the given values: the plain positional form plus
/// any number of trailing fractional zeros. Values too wide to spell
/// positionally are left out.
pub fn literal_numbers(values: &[Decimal]) -> Result<Dfa, DfaError> {
    let mut alts = Vec::new();
    for v in values {
        let Some(plain) = v.to_plain_string(MAX_BOUND_DIGITS) else { continue };
        let alt = if v.is_zero() {
            r"-?0(?:\.0+)?".to_string()
        } else if plain.contains('.') {
            format!("{}0*", regex_syntax::escape(&plain))
        } else {
            format!(r"{}(?:\.0+)?", regex_syntax::escape(&plain))
        };
        alts.push(alt);
    }
    if alts.is_empty() {
        return Ok(Dfa::empty());
    }
    alts.sort();
    alts.dedup();
    Dfa::from_regex(&alts.iter().map(|a| format!("(?:{a})")).collect::<Vec<_>>().join("|"), Anchoring::Full)
}
