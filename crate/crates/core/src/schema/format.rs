//! Checkers for the `format` values the validator asserts.

use std::net::Ipv6Addr;

/// Formats that are asserted; any other `format` value is an annotation.
pub const ASSERTED_FORMATS: [&str; 8] = ["date-time", "date", "time", "email", "uri", "uuid", "ipv4", "ipv6"];

/// Returns `None` for formats that are not asserted.
pub fn check_format(format: &str, value: &str) -> Option<bool> {
    Some(match format {
        "date-time" => is_date_time(value),
        "date" => is_date(value),
        "time" => is_time(value),
        "email" => is_email(value),
        "uri" => is_uri(value),
        "uuid" => is_uuid(value),
        "ipv4" => is_ipv4(value),
        "ipv6" => is_ipv6(value),
        _ => return None,
    })
}

fn digits(s: &str, n: usize) -> Option<u32> {
    (s.len() == n && s.bytes().all(|b| b.is_ascii_digit())).then(|| s.parse().ok()).flatten()
}

fn days_in_month(year: u32, month: u32) -> u32 {
    match month {
        2 if year % 4 == 0 && (year % 100 != 0 || year % 400 == 0) => 29,
        2 => 28,
        4 | 6 | 9 | 11 => 30,
        _ => 31,
    }
}

pub fn is_date(s: &str) -> bool {
    let parts: Vec<&str> = s.split('-').collect();
    let [y, m, d] = parts[..] else { return false };
    let (Some(year), Some(month), Some(day)) = (digits(y, 4), digits(m, 2), digits(d, 2)) else {
        return false;
    };
    (1..=12).contains(&month) && day >= 1 && day <= days_in_month(year, month)
}

/// RFC 3339 `full-time`: the offset is mandatory.
pub fn is_time(s: &str) -> bool {
    let bytes = s.as_bytes();
    if !s.is_ascii() || bytes.len() < 9 || bytes[2] != b':' || bytes[5] != b':' {
        return false;
    }
    let (Some(hour), Some(minute), Some(second)) = (digits(&s[0..2], 2), digits(&s[3..5], 2), digits(&s[6..8], 2)) else {
        return false;
    };
    let mut rest = &s[8..];
    if let Some(frac) = rest.strip_prefix('.') {
        let n = frac.bytes().take_while(u8::is_ascii_digit).count();
        if n == 0 {
            return false;
        }
        rest = &frac[n..];
    }
    let offset_minutes: i64 = match rest {
        "Z" | "z" => 0,
        _ => {
            let b = rest.as_bytes();
            if b.len() != 6 || !(b[0] == b'+' || b[0] == b'-') || b[3] != b':' {
                return false;
            }
            let (Some(oh), Some(om)) = (digits(&rest[1..3], 2), digits(&rest[4..6], 2)) else {
                return false;
            };
            if oh > 23 || om > 59 {
                return false;
            }
            let m = i64::from(oh * 60 + om);
            if b[0] == b'+' {
                m
            } else {
                -m
            }
        }
    };
    if hour > 23 || minute > 59 || second > 60 {
        return false;
    }
    if second == 60 {
        // A leap second only exists at 23:59:60 UTC.
        let utc = (i64::from(hour * 60 + minute) - offset_minutes).rem_euclid(24 * 60);
        return utc == 23 * 60 + 59;
    }
    true
}

pub fn is_date_time(s: &str) -> bool {
    match s.find(['T', 't']) {
        Some(i) => is_date(&s[..i]) && is_time(&s[i + 1..]),
        None => false,
    }
}

pub fn is_email(s: &str) -> bool {
    let Some(at) = s.rfind('@') else { return false };
    let (local, domain) = (&s[..at], &s[at + 1..]);
    if local.is_empty() || local.len() > 64 || domain.is_empty() {
        return false;
    }
    let atext = |c: char| c.is_ascii_alphanumeric() || "!#$%&'*+-/=?^_`{|}~".contains(c) || !c.is_ascii();
    let local_ok = if local.len() >= 2 && local.starts_with('"') && local.ends_with('"') {
        let inner = &local[1..local.len() - 1];
        let mut chars = inner.chars();
        let mut ok = true;
        while let Some(c) = chars.next() {
            match c {
                '\\' => ok &= chars.next().is_some(),
                '"' => ok = false,
                c if (c as u32) < 0x20 => ok = false,
                _ => {}
            }
        }
        ok
    } else {
        local.split('.').all(|atom| !atom.is_empty() && atom.chars().all(atext))
    };
    if !local_ok {
        return false;
    }
    if let Some(literal) = domain.strip_prefix('[').and_then(|d| d.strip_suffix(']')) {
        return match literal.strip_prefix("IPv6:") {
            Some(v6) => is_ipv6(v6),
            None => is_ipv4(literal),
        };
    }
    domain.split('.').all(|label| {
        !label.is_empty()
            && label.len() <= 63
            && !label.starts_with('-')
            && !label.ends_with('-')
            && label.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || !c.is_ascii())
    })
}

fn is_unreserved(c: u8) -> bool {
    c.is_ascii_alphanumeric() || b"-._~".contains(&c)
}

fn is_sub_delim(c: u8) -> bool {
    b"!$&'()*+,;=".contains(&c)
}

/// Checks that every byte is allowed by `extra` or is unreserved, a
/// sub-delimiter or part of a well-formed percent escape.
fn uri_chars(s: &str, extra: &[u8]) -> bool {
    let b = s.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c == b'%' {
            if i + 2 >= b.len() {
                return false;
            }
            if !(b[i + 1].is_ascii_hexdigit() && b[i + 2].is_ascii_hexdigit()) {
                return false;
            }
            i += 3;
            continue;
        }
        if !(is_unreserved(c) || is_sub_delim(c) || extra.contains(&c)) {
            return false;
        }
        i += 1;
    }
    true
}

/// RFC 3986 absolute URI (a scheme is required).
pub fn is_uri(s: &str) -> bool {
    let Some(colon) = s.find(':') else { return false };
    let scheme = &s[..colon];
    let mut sc = scheme.bytes();
    if !sc.next().is_some_and(|c| c.is_ascii_alphabetic()) || !sc.all(|c| c.is_ascii_alphanumeric() || b"+-.".contains(&c)) {
        return false;
    }
    let rest = &s[colon + 1..];
    let (rest, fragment) = match rest.find('#') {
        Some(i) => (&rest[..i], Some(&rest[i + 1..])),
        None => (rest, None),
    };
    let (hier, query) = match rest.find('?') {
        Some(i) => (&rest[..i], Some(&rest[i + 1..])),
        None => (rest, None),
    };
    if fragment.is_some_and(|f| !uri_chars(f, b":@/?")) || query.is_some_and(|q| !uri_chars(q, b":@/?")) {
        return false;
    }
    let path = if let Some(after) = hier.strip_prefix("//") {
        let end = after.find('/').unwrap_or(after.len());
        let (authority, path) = after.split_at(end);
        let host_port = match authority.rfind('@') {
            Some(i) => {
                if !uri_chars(&authority[..i], b":") {
                    return false;
                }
                &authority[i + 1..]
            }
            None => authority,
        };
        let host = if host_port.starts_with('[') {
            let Some(close) = host_port.find(']') else { return false };
            let literal = &host_port[1..close];
            if !(is_ipv6(literal) || literal.starts_with(['v', 'V'])) {
                return false;
            }
            let port = &host_port[close + 1..];
            if !(port.is_empty() || port.strip_prefix(':').is_some_and(|p| p.bytes().all(|c| c.is_ascii_digit()))) {
                return false;
            }
            ""
        } else {
            match host_port.rfind(':') {
                Some(i) if host_port[i + 1..].bytes().all(|c| c.is_ascii_digit()) => &host_port[..i],
                Some(_) => return false,
                None => host_port,
            }
        };
        if !uri_chars(host, b"") {
            return false;
        }
        path
    } else {
        hier
    };
    uri_chars(path, b":@/")
}

pub fn is_uuid(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() == 36
        && b.iter().enumerate().all(|(i, c)| match i {
            8 | 13 | 18 | 23 => *c == b'-',
            _ => c.is_ascii_hexdigit(),
        })
}

pub fn is_ipv4(s: &str) -> bool {
    let parts: Vec<&str> = s.split('.').collect();
    parts.len() == 4
        && parts.iter().all(|p| {
            !p.is_empty()
                && p.len() <= 3
                && p.bytes().all(|c| c.is_ascii_digit())
                && !(p.len() > 1 && p.starts_with('0'))
                && p.parse::<u32>().is_ok_and(|n| n <= 255)
        })
}

pub fn is_ipv6(s: &str) -> bool {
    s.is_ascii() && s.parse::<Ipv6Addr>().is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dates() {
        assert!(is_date("2020-02-29"));
        assert!(!is_date("2021-02-29"));
        assert!(!is_date("2020-13-01"));
        assert!(!is_date("20-01-01"));
        assert!(is_date_time("1963-06-19T08:30:06.283185Z"));
        assert!(is_date_time("1990-12-31T15:59:60-08:00"));
        assert!(!is_date_time("1990-12-31T15:59:60Z"));
        assert!(!is_date_time("1990-12-31 15:59:59Z"));
        assert!(is_time("08:30:06+01:00"));
        assert!(!is_time("08:30:06"));
        assert!(!is_time("24:00:00Z"));
    }

    #[test]
    fn addresses() {
        assert!(is_ipv4("192.168.0.1"));
        assert!(!is_ipv4("999.1.1.1"));
        assert!(!is_ipv4("01.1.1.1"));
        assert!(!is_ipv4("1.1.1"));
        assert!(is_ipv6("::1"));
        assert!(is_ipv6("1:2:3:4:5:6:7:8"));
        assert!(!is_ipv6("12345::"));
        assert!(!is_ipv6("fe80::1%eth0"));
    }

    #[test]
    fn emails_and_uris() {
        assert!(is_email("joe.bloggs@example.com"));
        assert!(is_email("\"joe bloggs\"@example.com"));
        assert!(!is_email("2962"));
        assert!(!is_email(".test@example.com"));
        assert!(!is_email("te..st@example.com"));
        assert!(is_uri("http://foo.bar/?baz=qux#quux"));
        assert!(is_uri("urn:oasis:names:specification:docbook:dtd:xml:4.1.2"));
        assert!(is_uri("mailto:John.Doe@example.com"));
        assert!(!is_uri("//foo.bar/?baz=qux#quux"));
        assert!(!is_uri("http:// shouldfail.com"));
        assert!(!is_uri("http://example.com/%zz"));
    }

    #[test]
    fn uuids() {
        assert!(is_uuid("2EB8AA08-AA98-11EA-B4AA-73B441D16380"));
        assert!(!is_uuid("2eb8aa08-aa98-11ea-b4aa-73b441d1638"));
        assert!(!is_uuid("2eb8aa08aa9811eab4aa73b441d16380----"));
    }

    #[test]
    fn unknown_formats_are_annotations() {
        assert_eq!(check_format("hostname", "!!"), None);
    }
}
