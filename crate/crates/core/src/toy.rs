//! The toy propositional language of the sandbox.
//!
//! Atoms come in four families: `lam(i)` for `i >= 1` (the lambda facts
//! selected by the sandbox function h), `falsum` (the designated false
//! sentence, the "0 = 1" analogue — an atom distinct from the logical
//! constant `false`), free letters, and the reserved box-marker family
//! `pr(n)` standing for "the formula coded n is output". Box markers are
//! only ever checked against run output, never asserted as axioms by the
//! seeding machinery.
//!
//! Toy formulas share the numeric coding scheme with modal formulas but
//! live in their own namespace: the same number decodes independently in
//! each language.

use crate::coding::{self, Code};
use crate::parse;
use num_bigint::BigUint;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ToyFormula {
    Bot,
    Falsum,
    Lam(u64),
    Letter(String),
    BoxMarker(Code),
    Not(Box<ToyFormula>),
    And(Box<ToyFormula>, Box<ToyFormula>),
    Or(Box<ToyFormula>, Box<ToyFormula>),
    Imp(Box<ToyFormula>, Box<ToyFormula>),
}

impl ToyFormula {
    pub fn letter(name: &str) -> ToyFormula {
        ToyFormula::Letter(name.to_string())
    }

    #[allow(clippy::should_implement_trait)] // builder, not an operator
    pub fn not(self) -> ToyFormula {
        ToyFormula::Not(Box::new(self))
    }

    pub fn and(self, other: ToyFormula) -> ToyFormula {
        ToyFormula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: ToyFormula) -> ToyFormula {
        ToyFormula::Or(Box::new(self), Box::new(other))
    }

    pub fn imp(self, other: ToyFormula) -> ToyFormula {
        ToyFormula::Imp(Box::new(self), Box::new(other))
    }

    /// Desugared biconditional: `(a -> b) & (b -> a)`.
    pub fn iff(a: ToyFormula, b: ToyFormula) -> ToyFormula {
        a.clone().imp(b.clone()).and(b.imp(a))
    }

    /// Destructures a desugared biconditional.
    pub fn as_iff(&self) -> Option<(&ToyFormula, &ToyFormula)> {
        if let ToyFormula::And(l, r) = self {
            if let (ToyFormula::Imp(a, b), ToyFormula::Imp(b2, a2)) = (l.as_ref(), r.as_ref()) {
                if a == a2 && b == b2 {
                    return Some((a, b));
                }
            }
        }
        None
    }

    /// Lambda indices occurring anywhere in the formula.
    pub fn lam_indices(&self, out: &mut std::collections::BTreeSet<u64>) {
        match self {
            ToyFormula::Lam(i) => {
                out.insert(*i);
            }
            ToyFormula::Bot
            | ToyFormula::Falsum
            | ToyFormula::Letter(_)
            | ToyFormula::BoxMarker(_) => {}
            ToyFormula::Not(x) => x.lam_indices(out),
            ToyFormula::And(l, r) | ToyFormula::Or(l, r) | ToyFormula::Imp(l, r) => {
                l.lam_indices(out);
                r.lam_indices(out);
            }
        }
    }

    pub fn code(&self) -> Code {
        Code::from_big(self.code_big())
    }

    fn atom_payload(&self) -> Option<BigUint> {
        // tag 0: falsum; tag 1: lam(i), i >= 1; tag 2: letter; tag 3: pr(c)
        match self {
            ToyFormula::Falsum => Some(BigUint::from(0u8)),
            ToyFormula::Lam(i) => Some(BigUint::from(4 * *i + 1)),
            ToyFormula::Letter(name) => {
                let idx = coding::name_to_index(name)?;
                Some(idx * 4u8 + 2u8)
            }
            ToyFormula::BoxMarker(c) => Some(c.big() * 4u8 + 3u8),
            _ => None,
        }
    }

    fn code_big(&self) -> BigUint {
        match self {
            ToyFormula::Bot => coding::compose(0, BigUint::from(0u8)),
            ToyFormula::Falsum
            | ToyFormula::Lam(_)
            | ToyFormula::Letter(_)
            | ToyFormula::BoxMarker(_) => {
                coding::compose(1, self.atom_payload().expect("valid toy atom"))
            }
            ToyFormula::Not(x) => coding::compose(2, x.code_big()),
            ToyFormula::And(l, r) => coding::compose(3, coding::pair(&l.code_big(), &r.code_big())),
            ToyFormula::Or(l, r) => coding::compose(4, coding::pair(&l.code_big(), &r.code_big())),
            ToyFormula::Imp(l, r) => coding::compose(5, coding::pair(&l.code_big(), &r.code_big())),
        }
    }

    pub fn decode(code: &Code) -> Option<ToyFormula> {
        Self::decode_big(code.big())
    }

    fn decode_big(n: &BigUint) -> Option<ToyFormula> {
        let (rank, payload) = coding::split(n)?;
        match rank {
            0 => (payload == BigUint::from(0u8)).then_some(ToyFormula::Bot),
            1 => {
                let tag: u8 = u8::try_from(&payload % 4u8).ok()?;
                let v = &payload / 4u8;
                match tag {
                    0 => (v == BigUint::from(0u8)).then_some(ToyFormula::Falsum),
                    1 => {
                        let i = u64::try_from(&v).ok()?;
                        (i >= 1).then_some(ToyFormula::Lam(i))
                    }
                    2 => Some(ToyFormula::Letter(coding::index_to_name(&v))),
                    _ => {
                        (!v.bits().eq(&0)).then(|| ToyFormula::BoxMarker(Code::from_big(v)))
                    }
                }
            }
            2 => Some(ToyFormula::decode_big(&payload)?.not()),
            3..=5 => {
                let (a, b) = coding::unpair(&payload);
                let l = ToyFormula::decode_big(&a)?;
                let r = ToyFormula::decode_big(&b)?;
                Some(match rank {
                    3 => l.and(r),
                    4 => l.or(r),
                    _ => l.imp(r),
                })
            }
            _ => None,
        }
    }

    fn prec(&self) -> u8 {
        match self {
            ToyFormula::Imp(..) => 1,
            ToyFormula::Or(..) => 2,
            ToyFormula::And(..) => 3,
            ToyFormula::Not(_) => 4,
            _ => 5,
        }
    }

    fn render(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let prec = self.prec();
        if prec < min_prec {
            write!(f, "(")?;
            self.render(f, 0)?;
            return write!(f, ")");
        }
        match self {
            ToyFormula::Bot => write!(f, "false"),
            ToyFormula::Falsum => write!(f, "falsum"),
            ToyFormula::Lam(i) => write!(f, "lam({i})"),
            ToyFormula::Letter(x) => write!(f, "{x}"),
            ToyFormula::BoxMarker(c) => write!(f, "pr({c})"),
            ToyFormula::Not(x) => {
                write!(f, "~")?;
                x.render(f, 4)
            }
            ToyFormula::And(l, r) => {
                l.render(f, 3)?;
                write!(f, " & ")?;
                r.render(f, 4)
            }
            ToyFormula::Or(l, r) => {
                l.render(f, 2)?;
                write!(f, " | ")?;
                r.render(f, 3)
            }
            ToyFormula::Imp(l, r) => {
                l.render(f, 2)?;
                write!(f, " -> ")?;
                r.render(f, 1)
            }
        }
    }
}

impl fmt::Display for ToyFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.render(f, 0)
    }
}

impl FromStr for ToyFormula {
    type Err = parse::ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse::parse_toy(s)
    }
}

impl Serialize for ToyFormula {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ToyFormula {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}

pub use parse::parse_toy;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn code_round_trip() {
        let samples = [
            ToyFormula::Bot,
            ToyFormula::Falsum,
            ToyFormula::Lam(1),
            ToyFormula::Lam(9),
            ToyFormula::letter("x"),
            ToyFormula::BoxMarker(Code::from_u64(12345)),
            ToyFormula::Lam(2).imp(ToyFormula::Falsum.not()),
            ToyFormula::iff(ToyFormula::letter("x"), ToyFormula::letter("y")),
        ];
        for f in samples {
            assert_eq!(ToyFormula::decode(&f.code()), Some(f.clone()), "{f}");
        }
    }

    #[test]
    fn lam_code_dominates_index() {
        // needed so a trigger value i is always <= its firing stage
        for i in 1u64..200 {
            let c = ToyFormula::Lam(i).code();
            assert!(c >= Code::from_u64(i));
        }
    }

    #[test]
    fn namespaces_are_separate() {
        // falsum's code decodes to something else entirely in the modal language
        let c = ToyFormula::Falsum.code();
        let modal = crate::formula::Formula::decode(&c);
        assert_ne!(format!("{modal:?}"), format!("{:?}", Some(ToyFormula::Falsum)));
    }

    #[test]
    fn render_reparses() {
        for src in ["lam(3) -> ~falsum", "pr(99) & (x | y)", "~~lam(1)"] {
            let f: ToyFormula = src.parse().unwrap();
            let g: ToyFormula = f.to_string().parse().unwrap();
            assert_eq!(f, g);
        }
    }
}
