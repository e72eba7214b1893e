//! Exact rational helpers shared by the exact (enumeration) code paths.

use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serializer};

use crate::error::CoreError;

pub type Rational = BigRational;

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"7/20"`, `"0.35"`, `"1"` or `"-2.5e-1"` style literals without
/// going through floating point.
pub fn parse_rational(text: &str) -> Result<Rational, CoreError> {
    let text = text.trim();
    let bad = || CoreError::BadNumber(text.to_string());
    if text.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = text.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| bad())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(num, den));
    }

    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = text[pos + 1..].parse().map_err(|_| bad())?;
            (&text[..pos], exp)
        }
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let joined = format!("{whole}{frac}");
    let numer = BigInt::from_str(&joined).map_err(|_| bad())?;
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10u8);
    let mut value = Rational::from_integer(numer);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if negative { -value } else { value })
}

/// `"num/den"`, or just `"num"` for integers.
pub fn format_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Least common denominator of `values`, the coarsest grid they all lie on.
pub fn common_resolution(values: &[Rational]) -> Option<u64> {
    values
        .iter()
        .try_fold(BigInt::one(), |acc, v| Some(acc.lcm(v.denom())))
        .and_then(|d| d.to_u64())
}

/// Smallest integer `m` with `m / resolution >= value`.
pub fn ceil_units(value: &Rational, resolution: u64) -> u64 {
    let scaled = value * Rational::from_integer(BigInt::from(resolution));
    let ceil = scaled.ceil().to_integer();
    if ceil.is_negative() {
        0
    } else {
        ceil.to_u64().unwrap_or(u64::MAX)
    }
}

pub(crate) mod serde_str {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

pub(crate) mod serde_str_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(values: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&format_rational(v))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| parse_rational(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

pub(crate) mod serde_str_opt_vec {
    use super::*;

    pub fn serialize<S: Serializer>(values: &Option<Vec<Rational>>, s: S) -> Result<S::Ok, S::Error> {
        match values {
            Some(v) => super::serde_str_vec::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Rational>>, D::Error> {
        let texts = Option::<Vec<String>>::deserialize(d)?;
        texts
            .map(|v| {
                v.iter()
                    .map(|t| parse_rational(t).map_err(serde::de::Error::custom))
                    .collect()
            })
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimal_and_fraction_forms() {
        assert_eq!(parse_rational("0.35").unwrap(), ratio(7, 20));
        assert_eq!(parse_rational("7/20").unwrap(), ratio(7, 20));
        assert_eq!(parse_rational("2/3").unwrap(), ratio(2, 3));
        assert_eq!(parse_rational("100").unwrap(), int(100));
        assert_eq!(parse_rational("-0.5").unwrap(), ratio(-1, 2));
        assert_eq!(parse_rational("1e-2").unwrap(), ratio(1, 100));
        assert_eq!(parse_rational(".25").unwrap(), ratio(1, 4));
    }

    #[test]
    fn rejects_garbage() {
        for text in ["", "abc", "1/0", "0.3.4", "1/x", "."] {
            assert!(parse_rational(text).is_err(), "{text}");
        }
    }

    #[test]
    fn ceil_units_is_exact() {
        assert_eq!(ceil_units(&ratio(1, 2), 4), 2);
        assert_eq!(ceil_units(&ratio(2, 3), 4), 3);
        assert_eq!(ceil_units(&ratio(3, 5), 10), 6);
        assert_eq!(ceil_units(&ratio(13, 20), 20), 13);
        assert_eq!(ceil_units(&ratio(2, 3), 6), 4);
    }

    #[test]
    fn formats_round_trip() {
        for text in ["7/30", "1", "0", "-3/4"] {
            assert_eq!(format_rational(&parse_rational(text).unwrap()), text);
        }
    }

    #[test]
    fn common_grid() {
        let values = [ratio(2, 5), ratio(7, 20), ratio(1, 4)];
        assert_eq!(common_resolution(&values), Some(20));
        assert_eq!(common_resolution(&[int(1), int(0)]), Some(1));
    }
}
