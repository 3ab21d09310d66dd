//! ECMA-262 regular expressions, as used by `pattern` and
//! `patternProperties`, rewritten into the syntax understood by the `regex`
//! and `regex-syntax` crates.
//!
//! The rewrite keeps ECMA meaning where the two dialects differ: `\d`, `\w`
//! and `\b` are ASCII-only, `\s` uses the ECMA whitespace set, `.` excludes
//! the four ECMA line terminators, `[` inside a class is literal, and a `{`
//! that does not start a quantifier is a literal brace. Lookaround and
//! backreferences have no equivalent and are reported as errors.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct PatternError {
    pub pattern: String,
    pub reason: String,
}

impl fmt::Display for PatternError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "unsupported pattern {:?}: {}", self.pattern, self.reason)
    }
}

const DIGIT: &str = "[0-9]";
const NOT_DIGIT: &str = "[^0-9]";
const WORD: &str = "[0-9A-Za-z_]";
const NOT_WORD: &str = "[^0-9A-Za-z_]";
const SPACE: &str = r"[\t\n\x0B\x0C\r \x{A0}\x{1680}\x{2000}-\x{200A}\x{2028}\x{2029}\x{202F}\x{205F}\x{3000}\x{FEFF}]";
const NOT_SPACE: &str = r"[^\t\n\x0B\x0C\r \x{A0}\x{1680}\x{2000}-\x{200A}\x{2028}\x{2029}\x{202F}\x{205F}\x{3000}\x{FEFF}]";
const DOT: &str = r"[^\n\r\x{2028}\x{2029}]";

/// Translates an ECMA-262 pattern into `regex` crate syntax.
pub fn translate(pattern: &str) -> Result<String, PatternError> {
    Translator { chars: pattern.chars().collect(), pos: 0, out: String::new(), source: pattern }.run()
}

struct Translator<'a> {
    chars: Vec<char>,
    pos: usize,
    out: String,
    source: &'a str,
}

impl Translator<'_> {
    fn fail<T>(&self, reason: &str) -> Result<T, PatternError> {
        Err(PatternError { pattern: self.source.to_string(), reason: reason.to_string() })
    }

    fn peek(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn run(mut self) -> Result<String, PatternError> {
        while let Some(c) = self.peek(0) {
            match c {
                '\\' => {
                    let piece = self.escape(false)?;
                    self.out.push_str(&piece);
                }
                '[' => self.class()?,
                '.' => {
                    self.out.push_str(DOT);
                    self.pos += 1;
                }
                '(' => {
                    self.pos += 1;
                    if self.peek(0) == Some('?') {
                        match (self.peek(1), self.peek(2)) {
                            (Some(':'), _) => {
                                self.out.push_str("(?:");
                                self.pos += 2;
                            }
                            (Some('<'), Some('=' | '!')) | (Some('=' | '!'), _) => {
                                return self.fail("lookaround assertions are not supported");
                            }
                            (Some('<'), _) => {
                                self.out.push_str("(?<");
                                self.pos += 2;
                            }
                            _ => return self.fail("unknown group syntax"),
                        }
                    } else {
                        self.out.push('(');
                    }
                }
                '{' => {
                    if self.quantifier_len().is_some() {
                        let len = self.quantifier_len().unwrap();
                        let text: String = self.chars[self.pos..self.pos + len].iter().collect();
                        self.out.push_str(&text);
                        self.pos += len;
                    } else {
                        self.out.push_str("\\{");
                        self.pos += 1;
                    }
                }
                '}' => {
                    self.out.push_str("\\}");
                    self.pos += 1;
                }
                ' ' | '#' => {
                    // Literal in both dialects; escaped so an inline `x` flag cannot change them.
                    self.out.push('\\');
                    self.out.push(c);
                    self.pos += 1;
                }
                _ => {
                    self.out.push(c);
                    self.pos += 1;
                }
            }
        }
        Ok(self.out)
    }

    /// Length of a `{n}`, `{n,}` or `{n,m}` quantifier starting at the cursor.
    fn quantifier_len(&self) -> Option<usize> {
        let mut i = 1;
        let digits = |i: &mut usize| {
            let start = *i;
            while self.peek(*i).is_some_and(|c| c.is_ascii_digit()) {
                *i += 1;
            }
            *i > start
        };
        if !digits(&mut i) {
            return None;
        }
        if self.peek(i) == Some(',') {
            i += 1;
            digits(&mut i);
        }
        (self.peek(i) == Some('}')).then_some(i + 1)
    }

    fn class(&mut self) -> Result<(), PatternError> {
        self.pos += 1;
        let negated = self.peek(0) == Some('^');
        if negated {
            self.pos += 1;
        }
        if self.peek(0) == Some(']') {
            self.pos += 1;
            // `[]` matches nothing and `[^]` matches anything.
            self.out.push_str(if negated { r"[\x00-\x{10FFFF}]" } else { r"[^\x00-\x{10FFFF}]" });
            return Ok(());
        }
        self.out.push('[');
        if negated {
            self.out.push('^');
        }
        loop {
            match self.peek(0) {
                None => return self.fail("unterminated character class"),
                Some(']') => {
                    self.pos += 1;
                    self.out.push(']');
                    return Ok(());
                }
                Some('\\') => {
                    let piece = self.escape(true)?;
                    self.out.push_str(&piece);
                }
                Some(c @ ('[' | '&' | '~' | '^')) => {
                    self.out.push('\\');
                    self.out.push(c);
                    self.pos += 1;
                }
                Some('-') if self.peek(1) == Some('-') => {
                    self.out.push_str("\\-");
                    self.pos += 1;
                }
                Some(c) => {
                    self.out.push(c);
                    self.pos += 1;
                }
            }
        }
    }

    fn escape(&mut self, in_class: bool) -> Result<String, PatternError> {
        self.pos += 1;
        let Some(c) = self.peek(0) else {
            return self.fail("trailing backslash");
        };
        self.pos += 1;
        let piece = match c {
            'd' => DIGIT.to_string(),
            'D' => NOT_DIGIT.to_string(),
            'w' => WORD.to_string(),
            'W' => NOT_WORD.to_string(),
            's' => SPACE.to_string(),
            'S' => NOT_SPACE.to_string(),
            'b' if in_class => r"\x08".to_string(),
            'b' => r"(?-u:\b)".to_string(),
            'B' if !in_class => r"(?-u:\B)".to_string(),
            't' => r"\t".to_string(),
            'n' => r"\n".to_string(),
            'r' => r"\r".to_string(),
            'v' => r"\x0B".to_string(),
            'f' => r"\x0C".to_string(),
            '0' if !self.peek(0).is_some_and(|d| d.is_ascii_digit()) => r"\x00".to_string(),
            '1'..='9' => return self.fail("backreferences are not supported"),
            'c' => match self.peek(0) {
                Some(l) if l.is_ascii_alphabetic() => {
                    self.pos += 1;
                    format!(r"\x{:02X}", (l as u8) % 32)
                }
                _ => r"\\c".to_string(),
            },
            'x' => {
                let hex = self.hex_digits(2).ok_or(()).or_else(|_| self.fail("bad \\x escape"))?;
                format!(r"\x{{{hex:X}}}")
            }
            'u' => {
                if self.peek(0) == Some('{') {
                    let end = (self.pos..self.chars.len()).find(|&i| self.chars[i] == '}');
                    let Some(end) = end else { return self.fail("bad \\u{} escape") };
                    let text: String = self.chars[self.pos + 1..end].iter().collect();
                    self.pos = end + 1;
                    let v = u32::from_str_radix(&text, 16).or_else(|_| self.fail("bad \\u{} escape"))?;
                    format!(r"\x{{{v:X}}}")
                } else {
                    let Some(hi) = self.hex_digits(4) else { return self.fail("bad \\u escape") };
                    let mut value = hi;
                    if (0xD800..0xDC00).contains(&hi) && self.peek(0) == Some('\\') && self.peek(1) == Some('u') {
                        let save = self.pos;
                        self.pos += 2;
                        match self.hex_digits(4) {
                            Some(lo) if (0xDC00..0xE000).contains(&lo) => {
                                value = 0x10000 + ((hi - 0xD800) << 10) + (lo - 0xDC00);
                            }
                            _ => self.pos = save,
                        }
                    }
                    if char::from_u32(value).is_none() {
                        return self.fail("lone surrogate escape");
                    }
                    format!(r"\x{{{value:X}}}")
                }
            }
            'p' | 'P' => {
                if self.peek(0) != Some('{') {
                    return self.fail("bad property escape");
                }
                let end = (self.pos..self.chars.len()).find(|&i| self.chars[i] == '}');
                let Some(end) = end else { return self.fail("bad property escape") };
                let body: String = self.chars[self.pos..=end].iter().collect();
                self.pos = end + 1;
                format!("\\{c}{body}")
            }
            'k' => return self.fail("named backreferences are not supported"),
            c if c.is_ascii_alphanumeric() => return self.fail("unknown escape"),
            c => {
                let mut buf = [0u8; 4];
                regex_syntax::escape(c.encode_utf8(&mut buf))
            }
        };
        Ok(piece)
    }

    fn hex_digits(&mut self, n: usize) -> Option<u32> {
        let text: String = (0..n).map(|i| self.peek(i)).collect::<Option<String>>()?;
        if !text.chars().all(|c| c.is_ascii_hexdigit()) {
            return None;
        }
        self.pos += n;
        u32::from_str_radix(&text, 16).ok()
    }
}

/// Compiles an ECMA pattern for unanchored searching.
pub fn compile_regex(pattern: &str) -> Result<regex::Regex, PatternError> {
    let translated = translate(pattern)?;
    regex::RegexBuilder::new(&translated)
        .size_limit(1 << 24)
        .build()
        .map_err(|e| PatternError { pattern: pattern.to_string(), reason: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matches(pattern: &str, text: &str) -> bool {
        compile_regex(pattern).unwrap().is_match(text)
    }

    #[test]
    fn ascii_classes() {
        assert!(matches(r"^\d+$", "0123"));
        assert!(!matches(r"^\d$", "\u{0660}"));
        assert!(!matches(r"^\w$", "é"));
        assert!(matches(r"^\s$", "\u{FEFF}"));
        assert!(matches(r"^[\d\-]+$", "1-2"));
    }

    #[test]
    fn dot_excludes_line_terminators() {
        assert!(matches("^.$", "é"));
        assert!(!matches("^.$", "\n"));
        assert!(!matches("^.$", "\u{2028}"));
    }

    #[test]
    fn literal_braces_and_brackets() {
        assert!(matches("a{", "a{"));
        assert!(matches("^a{2}$", "aa"));
        assert!(matches("^[[]$", "["));
        assert!(matches("^x}$", "x}"));
    }

    #[test]
    fn unicode_escapes() {
        assert!(matches(r"^\u00e9$", "é"));
        assert!(matches(r"^\uD83D\uDE00$", "😀"));
        assert!(matches(r"^\p{L}+$", "héllo"));
    }

    #[test]
    fn unsupported_constructs() {
        assert!(translate("a(?=b)").is_err());
        assert!(translate(r"(a)\1").is_err());
        assert!(translate("(?<!a)b").is_err());
    }

    #[test]
    fn empty_classes() {
        assert!(!matches("[]", "a"));
        assert!(matches("^[^]$", "\n"));
    }
}
