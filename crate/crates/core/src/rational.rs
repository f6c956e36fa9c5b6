//! Exact rational helpers: parsing, formatting, serde adapters and integer logarithms.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational used for all exact computations.
pub type Q = BigRational;

/// Rational `n / d`.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Integer as a rational.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, an integer, or a decimal such as `"-1.25e-3"`.
pub fn parse_q(s: &str) -> Result<Q> {
    let t = s.trim();
    let err = || Error::Parse(s.to_string());
    if t.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Q::new(n, d));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| err())?),
        None => (t, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| err())? };
    let scale = exp - frac_part.len() as i32;
    let ten = Q::from_integer(BigInt::from(10));
    let mut value = Q::from_integer(numer) * ten.pow(scale);
    if neg {
        value = -value;
    }
    Ok(value)
}

/// Formats as `"p"` for integers and `"p/q"` otherwise.
pub fn format_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Nearest binary64 value.
pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational value of a finite float.
pub fn from_f64(x: f64) -> Result<Q> {
    Q::from_float(x).ok_or_else(|| Error::InvalidParameter(format!("non-finite value {x}")))
}

/// `base^e` for an integer exponent of either sign.
pub fn pow(base: &Q, e: i64) -> Q {
    base.pow(e as i32)
}

/// Smallest integer `k` with `base^k >= x`, for `base > 1` and `x > 0`.
pub fn ceil_log(base: &Q, x: &Q) -> i64 {
    debug_assert!(base > &Q::one() && x.is_positive());
    let est = (to_f64(x).ln() / to_f64(base).ln()).ceil();
    let mut k = if est.is_finite() { est as i64 } else { 0 };
    while pow(base, k) < *x {
        k += 1;
    }
    while pow(base, k - 1) >= *x {
        k -= 1;
    }
    k
}

/// Largest integer `k` with `base^k <= x`, for `base > 1` and `x > 0`.
pub fn floor_log(base: &Q, x: &Q) -> i64 {
    debug_assert!(base > &Q::one() && x.is_positive());
    let est = (to_f64(x).ln() / to_f64(base).ln()).floor();
    let mut k = if est.is_finite() { est as i64 } else { 0 };
    while pow(base, k) > *x {
        k -= 1;
    }
    while pow(base, k + 1) <= *x {
        k += 1;
    }
    k
}

/// Absolute value.
pub fn abs(x: &Q) -> Q {
    x.abs()
}

/// Serde adapter storing a rational as a `"p/q"` string and accepting strings or JSON numbers.
pub mod serde_q {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_q(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        from_value(&v).map_err(de::Error::custom)
    }

    pub(crate) fn from_value(v: &serde_json::Value) -> Result<Q> {
        match v {
            serde_json::Value::String(s) => parse_q(s),
            serde_json::Value::Number(n) => parse_q(&n.to_string()),
            other => Err(Error::Parse(other.to_string())),
        }
    }
}

/// Serde adapter for a sequence of rationals.
pub mod serde_q_vec {
    use super::*;
    use serde::ser::SerializeSeq;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&format_q(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
        let v = Vec::<serde_json::Value>::deserialize(d)?;
        v.iter().map(|x| serde_q::from_value(x).map_err(de::Error::custom)).collect()
    }
}

/// Serde adapter for an optional rational.
pub mod serde_q_opt {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match x {
            Some(x) => s.serialize_some(&format_q(x)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Q>, D::Error> {
        match Option::<serde_json::Value>::deserialize(d)? {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(v) => serde_q::from_value(&v).map(Some).map_err(de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_integer_and_decimal() {
        assert_eq!(parse_q("3/4").unwrap(), q(3, 4));
        assert_eq!(parse_q("-7").unwrap(), qi(-7));
        assert_eq!(parse_q("1.25").unwrap(), q(5, 4));
        assert_eq!(parse_q("0.1").unwrap(), q(1, 10));
        assert_eq!(parse_q("2.5e-2").unwrap(), q(1, 40));
        assert_eq!(parse_q("1E3").unwrap(), qi(1000));
        assert_eq!(parse_q(".5").unwrap(), q(1, 2));
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "abc", "1/0", "1.2.3", "-", "."] {
            assert!(parse_q(s).is_err(), "{s}");
        }
    }

    #[test]
    fn format_round_trips() {
        for x in [q(3, 4), qi(5), q(-7, 3), qi(0)] {
            assert_eq!(parse_q(&format_q(&x)).unwrap(), x);
        }
        assert_eq!(format_q(&q(6, 4)), "3/2");
    }

    #[test]
    fn integer_logs_bracket_value() {
        let b = q(11, 10);
        for x in [q(1, 1), q(1, 3), q(121, 100), qi(1000), q(1, 1000)] {
            let c = ceil_log(&b, &x);
            assert!(pow(&b, c) >= x && pow(&b, c - 1) < x);
            let f = floor_log(&b, &x);
            assert!(pow(&b, f) <= x && pow(&b, f + 1) > x);
        }
        assert_eq!(ceil_log(&b, &q(121, 100)), 2);
        assert_eq!(floor_log(&b, &q(121, 100)), 2);
    }
}
