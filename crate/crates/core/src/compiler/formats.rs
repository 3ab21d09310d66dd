//! String automata for asserted formats.
//!
//! Each automaton accepts a subset of what the validator's format checker
//! accepts. Where the checker's rules are not regular (leap years, leap
//! seconds, length limits spread over several parts) the automaton leaves
//! the awkward cases out, which can only over-constrain.

use super::dfa::{Anchoring, Dfa, DfaError};

const DATE: &str = r"[0-9]{4}-(?:(?:0[1-9]|1[0-2])-(?:0[1-9]|1[0-9]|2[0-8])|(?:0[13-9]|1[0-2])-(?:29|30)|(?:0[13578]|1[02])-31)";
const TIME: &str = r"(?:[01][0-9]|2[0-3]):[0-5][0-9]:[0-5][0-9](?:\.[0-9]+)?(?:[Zz]|[+-](?:[01][0-9]|2[0-3]):[0-5][0-9])";
const ATEXT: &str = r"[A-Za-z0-9!#$%&'*+/=?^_`{|}~-]";
const LABEL: &str = r"[A-Za-z0-9](?:[A-Za-z0-9-]{0,61}[A-Za-z0-9])?";
const UNRESERVED: &str = r"[A-Za-z0-9._~-]";
const HEX4: &str = r"[0-9A-Fa-f]{1,4}";
const OCTET: &str = r"(?:25[0-5]|2[0-4][0-9]|1[0-9]{2}|[1-9]?[0-9])";

/// The regex for an asserted format, and whether it matches the checker
/// exactly.
pub fn format_regex(format: &str) -> Option<(String, bool)> {
    Some(match format {
        "date" => (DATE.to_string(), false),
        "time" => (TIME.to_string(), false),
        "date-time" => (format!("{DATE}[Tt]{TIME}"), false),
        // At most 63 characters before the `@`, never two dots in a row.
        "email" => (format!(r"{ATEXT}(?:\.?{ATEXT}){{0,31}}@{LABEL}(?:\.{LABEL})*"), false),
        "uri" => (
            format!(r"[A-Za-z][A-Za-z0-9+.-]*://{UNRESERVED}+(?:/{UNRESERVED}*)*(?:\?[A-Za-z0-9._~=&-]*)?"),
            false,
        ),
        "uuid" => (r"[0-9A-Fa-f]{8}-[0-9A-Fa-f]{4}-[0-9A-Fa-f]{4}-[0-9A-Fa-f]{4}-[0-9A-Fa-f]{12}".to_string(), true),
        "ipv4" => (format!(r"{OCTET}(?:\.{OCTET}){{3}}"), true),
        "ipv6" => (format!(r"{HEX4}(?::{HEX4}){{7}}|::(?:{HEX4}(?::{HEX4}){{0,5}})?"), false),
        _ => return None,
    })
}

/// `None` when the format is an annotation only.
pub fn format_dfa(format: &str) -> Option<Result<(Dfa, bool), DfaError>> {
    let (regex, exact) = format_regex(format)?;
    Some(Dfa::from_regex(&regex, Anchoring::Full).map(|d| (d, exact)))
}
