//! Exact rational numbers used for every probability in the crate.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Arbitrary-precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalParseError {
    #[error("empty probability string")]
    Empty,
    #[error("decimal or exponent notation is not accepted, write \"num/den\": {0:?}")]
    Decimal(String),
    #[error("malformed rational {0:?}")]
    Malformed(String),
    #[error("zero or negative denominator in {0:?}")]
    BadDenominator(String),
}

/// Parses `"num/den"` or an integer string. Floats are rejected so that no
/// rounding ever enters a decision.
pub fn parse_rational(text: &str) -> Result<Rational, RationalParseError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(RationalParseError::Empty);
    }
    if s.contains(['.', 'e', 'E']) {
        return Err(RationalParseError::Decimal(s.to_string()));
    }
    let parse_int = |part: &str| -> Result<BigInt, RationalParseError> {
        let part = part.trim();
        let digits = part.strip_prefix(['-', '+']).unwrap_or(part);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(RationalParseError::Malformed(s.to_string()));
        }
        part.parse::<BigInt>().map_err(|_| RationalParseError::Malformed(s.to_string()))
    };
    match s.split_once('/') {
        None => Ok(Rational::from_integer(parse_int(s)?)),
        Some((num, den)) => {
            let num = parse_int(num)?;
            let den = parse_int(den)?;
            if !den.is_positive() {
                return Err(RationalParseError::BadDenominator(s.to_string()));
            }
            Ok(Rational::new(num, den))
        }
    }
}

/// Canonical text form: `"n"` for integers, `"n/d"` otherwise.
pub fn format_rational(value: &Rational) -> String {
    value.to_string()
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

pub(crate) mod serde_str {
    use super::{format_rational, parse_rational, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse_rational("1/2").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("2/4").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("1").unwrap(), int(1));
        assert_eq!(parse_rational("0").unwrap(), int(0));
        assert_eq!(parse_rational("-3/9").unwrap(), ratio(-1, 3));
    }

    #[test]
    fn rejects_floats_and_garbage() {
        assert!(matches!(parse_rational("0.5"), Err(RationalParseError::Decimal(_))));
        assert!(matches!(parse_rational("1e-3"), Err(RationalParseError::Decimal(_))));
        assert!(matches!(parse_rational("1/0"), Err(RationalParseError::BadDenominator(_))));
        assert!(matches!(parse_rational("1/-2"), Err(RationalParseError::BadDenominator(_))));
        assert!(matches!(parse_rational("a/b"), Err(RationalParseError::Malformed(_))));
        assert!(matches!(parse_rational("1//2"), Err(RationalParseError::Malformed(_))));
        assert!(matches!(parse_rational(""), Err(RationalParseError::Empty)));
    }

    #[test]
    fn formatting_is_lowest_terms() {
        assert_eq!(format_rational(&ratio(6, 12)), "1/2");
        assert_eq!(format_rational(&ratio(4, 2)), "2");
    }
}
