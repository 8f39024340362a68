//! Exact rational helpers shared by every module.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number.
pub type Q = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RationalParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("zero denominator in \"{0}\"")]
    ZeroDenominator(String),
    #[error("invalid rational literal \"{0}\" (expected a or a/b with integers a, b)")]
    Invalid(String),
}

pub fn int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `a` or `a/b`. Decimal points and exponents are rejected.
pub fn parse_rational(text: &str) -> Result<Q, RationalParseError> {
    let t = text.trim();
    if t.is_empty() {
        return Err(RationalParseError::Empty);
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let parse_int = |s: &str| -> Result<BigInt, RationalParseError> {
        let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(RationalParseError::Invalid(t.to_string()));
        }
        s.parse::<BigInt>()
            .map_err(|_| RationalParseError::Invalid(t.to_string()))
    };
    let n = parse_int(num)?;
    let d = parse_int(den)?;
    if d.is_zero() {
        return Err(RationalParseError::ZeroDenominator(t.to_string()));
    }
    Ok(Q::new(n, d))
}

/// Formats as `a` or `a/b` in lowest terms.
pub fn fmt_q(q: &Q) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Decimal rendering for presentation columns only.
pub fn fmt_decimal(q: &Q) -> String {
    match q.to_f64() {
        Some(x) => format!("{x:.6}"),
        None => {
            if q.is_negative() {
                "-inf".into()
            } else {
                "inf".into()
            }
        }
    }
}

/// Wrapper that displays a rational as `a/b`.
pub struct Show<'a>(pub &'a Q);

impl fmt::Display for Show<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_q(self.0))
    }
}

pub fn floor_to_i64(q: &Q) -> Option<i64> {
    q.floor().to_integer().to_i64()
}
