//! Finite outcome spaces.
//!
//! Every node takes values in a named, ordered, finite set of symbolic
//! tokens. A token that reads as an integer or as a `p/q` fraction also
//! carries an exact rational annotation so mechanisms can be defined
//! arithmetically; tokens such as `odd` or `≤3` stay purely symbolic.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use num_bigint::BigInt;
use num_rational::BigRational;

/// One value of an outcome space: an opaque token plus an optional exact
/// numeric reading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceValue {
    token: String,
    numeric: Option<BigRational>,
}

impl SpaceValue {
    /// Builds a value, deriving the numeric annotation from the token.
    pub fn new(token: &str) -> Self {
        SpaceValue {
            token: token.to_string(),
            numeric: parse_rational(token),
        }
    }

    pub fn token(&self) -> &str {
        &self.token
    }

    /// Exact numeric reading of the token, when it has one.
    pub fn numeric(&self) -> Option<&BigRational> {
        self.numeric.as_ref()
    }
}

/// Named, ordered, finite set of outcome values.
///
/// The declared order is canonical: value indices, sweep order, and
/// serialized output all follow it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeSpace {
    name: String,
    values: Vec<SpaceValue>,
}

impl OutcomeSpace {
    /// Builds a space from ordered tokens. Tokens must be non-empty, unique,
    /// and free of `,` and `=` (both are separators in serialized forms).
    pub fn new(name: &str, tokens: &[&str]) -> core::result::Result<Self, String> {
        if tokens.is_empty() {
            return Err(alloc::format!("space `{name}` has no values"));
        }
        let mut values = Vec::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || t.contains(',') || t.contains('=') {
                return Err(alloc::format!("space `{name}`: bad token `{t}`"));
            }
            if tokens[..i].contains(t) {
                return Err(alloc::format!("space `{name}`: duplicate token `{t}`"));
            }
            values.push(SpaceValue::new(t));
        }
        Ok(OutcomeSpace {
            name: name.to_string(),
            values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of values.
    pub fn card(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[SpaceValue] {
        &self.values
    }

    pub fn value(&self, index: usize) -> &SpaceValue {
        &self.values[index]
    }

    pub fn token(&self, index: usize) -> &str {
        self.values[index].token()
    }

    /// Index of the value with this token, if present.
    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.values.iter().position(|v| v.token() == token)
    }
}

/// Parses an optional-sign integer or `p/q` fraction into an exact rational.
///
/// Returns `None` for anything else; `q` must be positive.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n = parse_int(num)?;
    let d = parse_int(den)?;
    if d <= BigInt::from(0) {
        return None;
    }
    Some(BigRational::new(n, d))
}

fn parse_int(s: &str) -> Option<BigInt> {
    let (neg, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut v = BigInt::from(0);
    for b in digits.bytes() {
        v = v * 10 + (b - b'0');
    }
    Some(if neg { -v } else { v })
}

/// Renders a rational in the canonical `p/q` form used by every serialized
/// output (always reduced, denominator at least 1, e.g. `1/2`, `0/1`, `3/1`).
pub fn rational_string(r: &BigRational) -> String {
    alloc::format!("{}/{}", r.numer(), r.denom())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_gain_numeric_annotations() {
        let s = OutcomeSpace::new("avg", &["0", "1/2", "1", "3/2", "2"]).unwrap();
        assert_eq!(s.card(), 5);
        assert_eq!(
            s.value(1).numeric(),
            Some(&BigRational::new(BigInt::from(1), BigInt::from(2)))
        );
        assert_eq!(s.value(0).numeric(), Some(&BigRational::from(BigInt::from(0))));
    }

    #[test]
    fn symbolic_tokens_have_no_annotation() {
        let s = OutcomeSpace::new("half", &["≤3", ">3"]).unwrap();
        assert_eq!(s.value(0).numeric(), None);
        assert_eq!(s.index_of(">3"), Some(1));
        assert_eq!(s.index_of("=3"), None);
    }

    #[test]
    fn rejects_duplicates_and_separator_tokens() {
        assert!(OutcomeSpace::new("x", &["a", "a"]).is_err());
        assert!(OutcomeSpace::new("x", &["a,b"]).is_err());
        assert!(OutcomeSpace::new("x", &["a=b"]).is_err());
        assert!(OutcomeSpace::new("x", &[]).is_err());
    }

    #[test]
    fn rational_parsing_rejects_junk() {
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("1/-2").is_none());
        assert!(parse_rational("x").is_none());
        assert!(parse_rational("1.5").is_none());
        assert_eq!(
            parse_rational("-3/6"),
            Some(BigRational::new(BigInt::from(-1), BigInt::from(2)))
        );
    }
}
