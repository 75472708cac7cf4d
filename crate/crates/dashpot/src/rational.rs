//! Parsing and printing of exact rational scalars.
//!
//! Chain parameters arrive from files or CLI flags as strings like `"3/2"`,
//! `"0.25"` or `"7"`. Decimal notation is parsed as an exact decimal
//! fraction (`0.1` becomes 1/10, not the nearest binary float), so model
//! entries stay exact all the way into the polynomial layer.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

pub use num_rational::BigRational;

/// Error produced when a string cannot be read as an exact rational.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse {input:?} as an exact rational: {reason}")]
pub struct RationalParseError {
    pub input: String,
    pub reason: String,
}

fn err(input: &str, reason: &str) -> RationalParseError {
    RationalParseError {
        input: input.to_string(),
        reason: reason.to_string(),
    }
}

/// Parses `p/q`, integer, or decimal notation (with optional exponent)
/// into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational, RationalParseError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(err(text, "empty string"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| err(text, "numerator is not an integer"))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| err(text, "denominator is not an integer"))?;
        if d.is_zero() {
            return Err(err(text, "denominator is zero"));
        }
        return Ok(BigRational::new(n, d));
    }
    parse_decimal(s).ok_or_else(|| err(text, "not an integer or decimal number"))
}

/// Parses decimal notation `[+-]digits[.digits][e[+-]digits]` exactly.
fn parse_decimal(s: &str) -> Option<BigRational> {
    let (mantissa, exp_part) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], Some(&s[pos + 1..])),
        None => (s, None),
    };
    let exponent: i64 = match exp_part {
        Some(e) => e.parse().ok()?,
        None => 0,
    };

    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }

    let joined = format!("{int_part}{frac_part}");
    let mut numer: BigInt = if joined.is_empty() {
        BigInt::zero()
    } else {
        joined.parse().ok()?
    };
    numer *= sign;

    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let pow = ten.pow(scale.unsigned_abs() as u32);
    if scale >= 0 {
        Some(BigRational::from_integer(numer * pow))
    } else {
        Some(BigRational::new(numer, pow))
    }
}

/// Formats a rational canonically: `p` when the denominator is one,
/// otherwise `p/q`.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Converts a float to the exact rational of its shortest round-trip
/// decimal form, so a TOML `0.1` is read as 1/10 rather than the binary
/// float it was parsed into.
pub fn rational_from_f64(x: f64) -> Result<BigRational, RationalParseError> {
    if !x.is_finite() {
        return Err(err(&x.to_string(), "not finite"));
    }
    parse_rational(&format!("{x}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn parses_fractions_integers_decimals() {
        assert_eq!(parse_rational("3/2").unwrap(), rat(3, 2));
        assert_eq!(parse_rational("-3/6").unwrap(), rat(-1, 2));
        assert_eq!(parse_rational("7").unwrap(), rat(7, 1));
        assert_eq!(parse_rational("0.1").unwrap(), rat(1, 10));
        assert_eq!(parse_rational("-2.50").unwrap(), rat(-5, 2));
        assert_eq!(parse_rational("1e-3").unwrap(), rat(1, 1000));
        assert_eq!(parse_rational("2.5e2").unwrap(), rat(250, 1));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.2.3").is_err());
        assert!(parse_rational("0x10").is_err());
    }

    #[test]
    fn formats_canonically() {
        assert_eq!(format_rational(&rat(4, 2)), "2");
        assert_eq!(format_rational(&rat(-1, 2)), "-1/2");
    }

    #[test]
    fn float_round_trip_recovers_decimal_intent() {
        assert_eq!(rational_from_f64(0.1).unwrap(), rat(1, 10));
        assert_eq!(rational_from_f64(-3.0).unwrap(), rat(-3, 1));
        assert!(rational_from_f64(f64::NAN).is_err());
    }
}
