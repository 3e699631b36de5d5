//! Canonical numeric codes for formulas.
//!
//! Every formula gets a natural-number code of the shape
//! `8 * payload + rank + 1`, where `rank` identifies the outermost
//! constructor and `payload` packs the constructor's data (an atom index,
//! a child code, or a Cantor pair of child codes). Codes start at 1; the
//! value 0 is reserved as the "no output" marker used by the sandbox.
//!
//! The scheme is injective with a decidable image, and strictly monotone:
//! a strict subformula always has a strictly smaller code. Monotonicity is
//! load-bearing — the sandbox's `F_s` membership tests and the termination
//! of its conjunction-closure computation both depend on it.
//!
//! Codes are arbitrary-precision. Sandbox stage numbers live on the same
//! scale (a stage must dominate the codes of the formulas in play), so
//! [`Code`] doubles as the stage type.

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::Add;
use std::str::FromStr;

/// Arbitrary-precision natural number used for formula codes and stage
/// numbers. Serializes as a decimal string; deserializes from a string or
/// a JSON integer.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Code(BigUint);

impl Code {
    pub fn zero() -> Self {
        Code(BigUint::zero())
    }

    pub fn from_u64(n: u64) -> Self {
        Code(BigUint::from(n))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn succ(&self) -> Code {
        Code(&self.0 + 1u8)
    }

    /// Predecessor; `None` on zero.
    pub fn pred(&self) -> Option<Code> {
        if self.0.is_zero() {
            None
        } else {
            Some(Code(&self.0 - 1u8))
        }
    }

    pub fn to_u64(&self) -> Option<u64> {
        u64::try_from(&self.0).ok()
    }

    pub(crate) fn big(&self) -> &BigUint {
        &self.0
    }

    pub(crate) fn from_big(b: BigUint) -> Self {
        Code(b)
    }

    pub fn checked_sub(&self, other: &Code) -> Option<Code> {
        if self.0 >= other.0 {
            Some(Code(&self.0 - &other.0))
        } else {
            None
        }
    }
}

impl Add<&Code> for &Code {
    type Output = Code;
    fn add(self, rhs: &Code) -> Code {
        Code(&self.0 + &rhs.0)
    }
}

impl From<u64> for Code {
    fn from(n: u64) -> Self {
        Code::from_u64(n)
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Code({})", self.0)
    }
}

impl FromStr for Code {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let b = BigUint::from_str(s).map_err(|e| format!("invalid natural number {s:?}: {e}"))?;
        Ok(Code(b))
    }
}

impl Serialize for Code {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Code {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = Code;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal string or a non-negative integer")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Code, E> {
                v.parse().map_err(E::custom)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Code, E> {
                Ok(Code::from_u64(v))
            }
        }
        d.deserialize_any(V)
    }
}

/// Cantor pairing, a bijection between pairs of naturals and naturals.
pub(crate) fn pair(a: &BigUint, b: &BigUint) -> BigUint {
    let s = a + b;
    (&s * (&s + 1u8)) / 2u8 + b
}

/// Inverse of [`pair`].
pub(crate) fn unpair(p: &BigUint) -> (BigUint, BigUint) {
    // w = floor((sqrt(8p+1) - 1) / 2), the diagonal index.
    let w = ((p * 8u8 + 1u8).sqrt() - 1u8) / 2u8;
    let t = (&w * (&w + 1u8)) / 2u8;
    let b = p - t;
    let a = &w - &b;
    (a, b)
}

/// Integer square root (floor), exposed for magnitude pruning.
pub(crate) fn isqrt(n: &BigUint) -> BigUint {
    n.sqrt()
}

pub(crate) fn compose(rank: u8, payload: BigUint) -> BigUint {
    payload * 8u8 + rank + 1u8
}

/// Splits a code into (rank, payload); `None` for the reserved 0.
pub(crate) fn split(n: &BigUint) -> Option<(u8, BigUint)> {
    if n.is_zero() {
        return None;
    }
    let m = n - 1u8;
    let rank = (&m % 8u8).try_into().ok().and_then(|r: u64| u8::try_from(r).ok())?;
    Some((rank, m / 8u8))
}

const FIRST_CHARS: usize = 26;
const REST_CHARS: u64 = 63;

fn rest_char_value(c: char) -> Option<u64> {
    match c {
        'a'..='z' => Some(c as u64 - 'a' as u64),
        'A'..='Z' => Some(c as u64 - 'A' as u64 + 26),
        '0'..='9' => Some(c as u64 - '0' as u64 + 52),
        '_' => Some(62),
        _ => None,
    }
}

fn rest_char_from(v: u64) -> char {
    match v {
        0..=25 => (b'a' + v as u8) as char,
        26..=51 => (b'A' + (v - 26) as u8) as char,
        52..=61 => (b'0' + (v - 52) as u8) as char,
        _ => '_',
    }
}

/// Bijection between identifiers (`[a-z][a-zA-Z0-9_]*`) and naturals.
pub(crate) fn name_to_index(name: &str) -> Option<BigUint> {
    let mut chars = name.chars();
    let first = chars.next()?;
    if !first.is_ascii_lowercase() {
        return None;
    }
    let mut i = BigUint::from(first as u64 - 'a' as u64);
    for c in chars {
        let v = rest_char_value(c)?;
        i = i * REST_CHARS + v + FIRST_CHARS as u64;
    }
    Some(i)
}

/// Inverse of [`name_to_index`]; total on naturals.
pub(crate) fn index_to_name(i: &BigUint) -> String {
    let mut rest = Vec::new();
    let mut i = i.clone();
    let first_bound = BigUint::from(FIRST_CHARS);
    while i >= first_bound {
        let j = &i - FIRST_CHARS;
        let v: u64 = (&j % REST_CHARS).try_into().expect("digit fits u64");
        rest.push(rest_char_from(v));
        i = j / REST_CHARS;
    }
    let first: u64 = i.try_into().expect("first char index fits u64");
    let mut s = String::new();
    s.push((b'a' + first as u8) as char);
    rest.reverse();
    s.extend(rest);
    s
}
