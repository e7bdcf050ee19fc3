//! Exact rational numbers and their textual form.
//!
//! Every cost, share and potential value in the crate is a [`Rational`]. The
//! canonical token is `p/q` in lowest terms, or just `p` when `q = 1`.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

pub use num_rational::BigRational as Rational;

/// Parses `-?digits` or `-?digits/digits` with a nonzero denominator.
pub fn parse_rational(token: &str) -> Option<Rational> {
    fn int(s: &str) -> Option<BigInt> {
        let digits = s.strip_prefix('-').unwrap_or(s);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        s.parse().ok()
    }
    match token.split_once('/') {
        None => int(token).map(Rational::from_integer),
        Some((p, q)) => {
            if q.starts_with('-') {
                return None;
            }
            let (p, q) = (int(p)?, int(q)?);
            if q.is_zero() {
                return None;
            }
            Some(Rational::new(p, q))
        }
    }
}

pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn from_int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn from_frac(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Decimal rendering with 12 significant digits.
pub fn decimal12(r: &Rational) -> String {
    decimal12_f64(to_f64(r))
}

pub fn decimal12_f64(v: f64) -> String {
    if v == 0.0 {
        return "0.00000000000".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let magnitude = v.abs().log10().floor() as i32;
    if !(-5..=15).contains(&magnitude) {
        return format!("{v:.11e}");
    }
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Compares an exact value against a real bound with an absolute slack.
pub fn le_with_slack(exact: &Rational, bound: f64, slack: f64) -> bool {
    to_f64(exact) <= bound + slack
}

/// Serde adapters writing rationals as exact strings.
pub mod serde_str {
    use super::{format_rational, parse_rational, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).ok_or_else(|| D::Error::custom(format!("bad rational {s:?}")))
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
            match r {
                Some(r) => s.serialize_some(&format_rational(r)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
            let s = Option::<String>::deserialize(d)?;
            s.map(|s| parse_rational(&s).ok_or_else(|| D::Error::custom(format!("bad rational {s:?}"))))
                .transpose()
        }
    }
}
