//! Exact rational quantities used for costs, valuations and shares.
//!
//! Everything in mechanism logic is compared exactly, so values are kept as
//! reduced fractions and only ever rendered as text at the edges.

use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::de::{self, Visitor};
use serde::{Deserializer, Serializer};

use crate::error::Error;

/// Exact nonnegative-by-convention rational (costs, valuations, shares, welfare).
pub type Value = Ratio<i128>;

pub fn int(n: i128) -> Value {
    Value::from_integer(n)
}

pub fn frac(num: i128, den: i128) -> Value {
    Value::new(num, den)
}

/// Parses `7`, `-3`, `2.5`, `5/2` (and `1e2`-free decimals) into an exact value.
pub fn parse_value(text: &str) -> Result<Value, Error> {
    let malformed = || Error::MalformedNumber(text.to_string());
    let t = text.trim();
    if t.is_empty() {
        return Err(malformed());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = i128::from_str(n.trim()).map_err(|_| malformed())?;
        let d = i128::from_str(d.trim()).map_err(|_| malformed())?;
        if d == 0 {
            return Err(malformed());
        }
        return Ok(Value::new(n, d));
    }
    let (negative, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (whole, fraction) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && fraction.is_empty() {
        return Err(malformed());
    }
    let digits_ok = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if !digits_ok(whole) || !digits_ok(fraction) || fraction.len() > 30 {
        return Err(malformed());
    }
    let mut numer: i128 = 0;
    for b in whole.bytes().chain(fraction.bytes()) {
        numer = numer
            .checked_mul(10)
            .and_then(|n| n.checked_add(i128::from(b - b'0')))
            .ok_or_else(malformed)?;
    }
    let denom = 10i128
        .checked_pow(fraction.len() as u32)
        .ok_or_else(malformed)?;
    let v = Value::new(numer, denom);
    Ok(if negative { -v } else { v })
}

/// Integers render as `7`, everything else as `p/q`.
pub fn format_value(v: &Value) -> String {
    if v.is_integer() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

pub fn is_negative(v: &Value) -> bool {
    v.is_negative()
}

pub fn sum<'a>(values: impl IntoIterator<Item = &'a Value>) -> Value {
    values.into_iter().fold(Value::zero(), |acc, v| acc + v)
}

/// Serde adapter: integers as JSON integers, other rationals as `"p/q"` strings.
/// Accepts JSON numbers (parsed from their exact text) or strings on input.
pub mod serde_value {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Value, s: S) -> Result<S::Ok, S::Error> {
        if v.is_integer() {
            s.serialize_i128(*v.numer())
        } else {
            s.serialize_str(&format_value(v))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Value, D::Error> {
        d.deserialize_any(ValueVisitor)
    }

    struct ValueVisitor;

    impl<'de> Visitor<'de> for ValueVisitor {
        type Value = Value;

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("an integer, a decimal, or a \"p/q\" string")
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Value, E> {
            Ok(int(i128::from(v)))
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Value, E> {
            Ok(int(i128::from(v)))
        }

        fn visit_i128<E: de::Error>(self, v: i128) -> Result<Value, E> {
            Ok(int(v))
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<Value, E> {
            // Only reached without exact number text; render the shortest
            // decimal that round-trips and parse that.
            parse_value(&v.to_string()).map_err(E::custom)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<Value, E> {
            parse_value(v).map_err(E::custom)
        }

        fn visit_map<A: de::MapAccess<'de>>(self, mut map: A) -> Result<Value, A::Error> {
            // serde_json's arbitrary-precision numbers arrive as a one-entry map
            // holding the literal number text.
            let (_, text): (String, String) = map
                .next_entry()?
                .ok_or_else(|| de::Error::custom("empty number"))?;
            parse_value(&text).map_err(de::Error::custom)
        }
    }
}

/// Same as [`serde_value`] for map values keyed by anything serde can key.
pub mod serde_value_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Serialize};

    use super::*;

    #[derive(Serialize, Deserialize)]
    struct Wrapped(#[serde(with = "super::serde_value")] Value);

    pub fn serialize<K: Serialize + Ord, S: Serializer>(
        m: &BTreeMap<K, Value>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut out = s.serialize_map(Some(m.len()))?;
        for (k, v) in m {
            out.serialize_entry(k, &Wrapped(*v))?;
        }
        out.end()
    }

    pub fn deserialize<'de, K, D>(d: D) -> Result<BTreeMap<K, Value>, D::Error>
    where
        K: Deserialize<'de> + Ord,
        D: Deserializer<'de>,
    {
        let raw: BTreeMap<K, Wrapped> = BTreeMap::deserialize(d)?;
        Ok(raw.into_iter().map(|(k, w)| (k, w.0)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        assert_eq!(parse_value("7").unwrap(), int(7));
        assert_eq!(parse_value("2.5").unwrap(), frac(5, 2));
        assert_eq!(parse_value("5/2").unwrap(), frac(5, 2));
        assert_eq!(parse_value("-0.125").unwrap(), frac(-1, 8));
        assert_eq!(parse_value(".5").unwrap(), frac(1, 2));
        assert_eq!(parse_value("0.1").unwrap(), frac(1, 10));
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "abc", "1/0", "1.2.3", "1e3", "--1", "."] {
            assert!(parse_value(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn formats_exactly() {
        assert_eq!(format_value(&int(3)), "3");
        assert_eq!(format_value(&frac(6, 4)), "3/2");
        assert_eq!(format_value(&frac(-1, 3)), "-1/3");
    }

    #[test]
    fn json_numbers_keep_their_exact_text() {
        #[derive(serde::Deserialize)]
        struct W(#[serde(with = "serde_value")] Value);
        let w: W = serde_json::from_str("0.1").unwrap();
        assert_eq!(w.0, frac(1, 10));
        let w: W = serde_json::from_str("\"7/3\"").unwrap();
        assert_eq!(w.0, frac(7, 3));
        let w: W = serde_json::from_str("12").unwrap();
        assert_eq!(w.0, int(12));
    }

    proptest::proptest! {
        #[test]
        fn format_then_parse_is_identity(n in -10_000i128..10_000, d in 1i128..500) {
            let v = frac(n, d);
            proptest::prop_assert_eq!(parse_value(&format_value(&v)).unwrap(), v);
        }
    }
}
