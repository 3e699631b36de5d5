//! Modal formula AST, the five logics, canonical codes, and subformula
//! machinery.
//!
//! The biconditional is parser sugar: `A <-> B` desugars to
//! `(A -> B) & (B -> A)`, and `true` to `~false`. Structural equality is
//! syntactic identity.

use crate::coding::{self, Code};
use crate::parse;
use num_bigint::BigUint;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Bot,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imp(Box<Formula>, Box<Formula>),
    Box(Box<Formula>),
}

impl Formula {
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(name.to_string())
    }

    pub fn top() -> Formula {
        Formula::Bot.not()
    }

    #[allow(clippy::should_implement_trait)] // builder, not an operator
    pub fn not(self) -> Formula {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, other: Formula) -> Formula {
        Formula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Formula) -> Formula {
        Formula::Or(Box::new(self), Box::new(other))
    }

    pub fn imp(self, other: Formula) -> Formula {
        Formula::Imp(Box::new(self), Box::new(other))
    }

    pub fn boxed(self) -> Formula {
        Formula::Box(Box::new(self))
    }

    /// Desugared biconditional: `(a -> b) & (b -> a)`.
    pub fn iff(a: Formula, b: Formula) -> Formula {
        a.clone().imp(b.clone()).and(b.imp(a))
    }

    /// Destructures a desugared biconditional.
    pub fn as_iff(&self) -> Option<(&Formula, &Formula)> {
        if let Formula::And(l, r) = self {
            if let (Formula::Imp(a, b), Formula::Imp(b2, a2)) = (l.as_ref(), r.as_ref()) {
                if a == a2 && b == b2 {
                    return Some((a, b));
                }
            }
        }
        None
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Bot => {}
            Formula::Atom(a) => {
                out.insert(a.clone());
            }
            Formula::Not(x) | Formula::Box(x) => x.collect_atoms(out),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }

    /// Canonical numeric code. Injective, with strictly smaller codes for
    /// strict subformulas.
    pub fn code(&self) -> Code {
        Code::from_big(self.code_big())
    }

    fn code_big(&self) -> BigUint {
        match self {
            Formula::Bot => coding::compose(0, BigUint::from(0u8)),
            Formula::Atom(a) => {
                let idx = coding::name_to_index(a).expect("atom names are valid identifiers");
                coding::compose(1, idx)
            }
            Formula::Not(x) => coding::compose(2, x.code_big()),
            Formula::And(l, r) => coding::compose(3, coding::pair(&l.code_big(), &r.code_big())),
            Formula::Or(l, r) => coding::compose(4, coding::pair(&l.code_big(), &r.code_big())),
            Formula::Imp(l, r) => coding::compose(5, coding::pair(&l.code_big(), &r.code_big())),
            Formula::Box(x) => coding::compose(6, x.code_big()),
        }
    }

    /// Inverse of [`Formula::code`]; `None` off the image.
    pub fn decode(code: &Code) -> Option<Formula> {
        Self::decode_big(code.big())
    }

    fn decode_big(n: &BigUint) -> Option<Formula> {
        let (rank, payload) = coding::split(n)?;
        match rank {
            0 => payload.bits().eq(&0).then_some(Formula::Bot),
            1 => Some(Formula::Atom(coding::index_to_name(&payload))),
            2 => Some(Formula::decode_big(&payload)?.not()),
            3..=5 => {
                let (a, b) = coding::unpair(&payload);
                let l = Formula::decode_big(&a)?;
                let r = Formula::decode_big(&b)?;
                Some(match rank {
                    3 => l.and(r),
                    4 => l.or(r),
                    _ => l.imp(r),
                })
            }
            6 => Some(Formula::decode_big(&payload)?.boxed()),
            _ => None,
        }
    }

    /// All subformulas, duplicates removed, ordered by code. The formula
    /// itself comes last (it carries the largest code).
    pub fn subformula_closure(&self) -> Vec<Formula> {
        let mut set = BTreeSet::new();
        self.collect_subformulas(&mut set);
        let mut v: Vec<(Code, Formula)> = set.into_iter().map(|f| (f.code(), f)).collect();
        v.sort();
        v.into_iter().map(|(_, f)| f).collect()
    }

    fn collect_subformulas(&self, out: &mut BTreeSet<Formula>) {
        if !out.insert(self.clone()) {
            return;
        }
        match self {
            Formula::Bot | Formula::Atom(_) => {}
            Formula::Not(x) | Formula::Box(x) => x.collect_subformulas(out),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                l.collect_subformulas(out);
                r.collect_subformulas(out);
            }
        }
    }

    /// Maximum nesting depth of the box operator.
    pub fn modal_depth(&self) -> usize {
        match self {
            Formula::Bot | Formula::Atom(_) => 0,
            Formula::Not(x) => x.modal_depth(),
            Formula::Box(x) => 1 + x.modal_depth(),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                l.modal_depth().max(r.modal_depth())
            }
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Formula::Imp(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            Formula::Not(_) | Formula::Box(_) => 4,
            Formula::Bot | Formula::Atom(_) => 5,
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
            Formula::Bot => write!(f, "false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(x) => {
                write!(f, "~")?;
                x.render(f, 4)
            }
            Formula::Box(x) => {
                write!(f, "[]")?;
                x.render(f, 4)
            }
            Formula::And(l, r) => {
                l.render(f, 3)?;
                write!(f, " & ")?;
                r.render(f, 4)
            }
            Formula::Or(l, r) => {
                l.render(f, 2)?;
                write!(f, " | ")?;
                r.render(f, 3)
            }
            Formula::Imp(l, r) => {
                l.render(f, 2)?;
                write!(f, " -> ")?;
                r.render(f, 1)
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.render(f, 0)
    }
}

impl FromStr for Formula {
    type Err = parse::ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse::parse_formula(s)
    }
}

impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// The five logics. `EN` is the congruent base system (rules MP, Nec, RE
/// over propositional tautologies); the others add one axiom each:
/// C (`[]A & []B -> [](A & B)`), P (`~[]false`), D (`~([]A & []~A)`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Logic {
    EN,
    ECN,
    ENP,
    END,
    ECNP,
}

impl Logic {
    pub const ALL: [Logic; 5] = [Logic::EN, Logic::ECN, Logic::ENP, Logic::END, Logic::ECNP];

    /// Static inclusion table: `stronger.extends(weaker)` holds exactly on
    /// the reflexive-transitive closure of EN ⊑ ENP ⊑ END and
    /// EN ⊑ ECN ⊑ ECNP.
    pub fn extends(self, weaker: Logic) -> bool {
        use Logic::*;
        matches!(
            (weaker, self),
            (EN, _)
                | (ENP, ENP)
                | (ENP, END)
                | (END, END)
                | (ECN, ECN)
                | (ECN, ECNP)
                | (ECNP, ECNP)
        )
    }

    /// Axiom C (intersection closure) is available.
    pub fn has_c(self) -> bool {
        matches!(self, Logic::ECN | Logic::ECNP)
    }

    /// Axiom P (`~[]false`) is available.
    pub fn has_p(self) -> bool {
        matches!(self, Logic::ENP | Logic::ECNP)
    }

    /// Axiom D (`~([]A & []~A)`) is available.
    pub fn has_d(self) -> bool {
        matches!(self, Logic::END)
    }
}

impl fmt::Display for Logic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Logic::EN => "EN",
            Logic::ECN => "ECN",
            Logic::ENP => "ENP",
            Logic::END => "END",
            Logic::ECNP => "ECNP",
        };
        f.write_str(s)
    }
}

impl FromStr for Logic {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "EN" => Ok(Logic::EN),
            "ECN" => Ok(Logic::ECN),
            "ENP" => Ok(Logic::ENP),
            "END" => Ok(Logic::END),
            "ECNP" => Ok(Logic::ECNP),
            _ => Err(format!("unknown logic {s:?}; expected EN, ECN, ENP, END or ECNP")),
        }
    }
}

pub use parse::{parse_formula, ParseError};
