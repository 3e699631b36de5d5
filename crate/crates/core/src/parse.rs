//! Recursive-descent parser shared by the modal and toy languages.
//!
//! Grammar (modal):
//!   fml := "false" | "true" | ident | "~" fml | fml "&" fml | fml "|" fml
//!        | fml "->" fml | fml "<->" fml | "[]" fml | "(" fml ")"
//! Precedence: ~, [] bind tightest, then &, then |, then -> (right
//! associative), then <->. `&` and `|` associate left.
//!
//! The toy language drops `[]` and reads `lam(i)`, `falsum` and `pr(n)`
//! as its designated atoms; any other identifier is a free letter.

use crate::coding::Code;
use crate::formula::Formula;
use crate::toy::ToyFormula;
use num_bigint::BigUint;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    /// Character offset of the offending token.
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at {}: {}", self.pos, self.msg)
    }
}

impl std::error::Error for ParseError {}

fn err<T>(pos: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { pos, msg: msg.into() })
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    False,
    True,
    Ident(String),
    Num(BigUint),
    Tilde,
    BoxOp,
    Amp,
    Pipe,
    Arrow,
    Iff,
    LParen,
    RParen,
}

fn lex(input: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = input.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
            }
            '~' => {
                toks.push((start, Tok::Tilde));
                i += 1;
            }
            '&' => {
                toks.push((start, Tok::Amp));
                i += 1;
            }
            '|' => {
                toks.push((start, Tok::Pipe));
                i += 1;
            }
            '(' => {
                toks.push((start, Tok::LParen));
                i += 1;
            }
            ')' => {
                toks.push((start, Tok::RParen));
                i += 1;
            }
            '[' => {
                if chars.get(i + 1) == Some(&']') {
                    toks.push((start, Tok::BoxOp));
                    i += 2;
                } else {
                    return err(start, "expected \"[]\"");
                }
            }
            '-' => {
                if chars.get(i + 1) == Some(&'>') {
                    toks.push((start, Tok::Arrow));
                    i += 2;
                } else {
                    return err(start, "expected \"->\"");
                }
            }
            '<' => {
                if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') {
                    toks.push((start, Tok::Iff));
                    i += 3;
                } else {
                    return err(start, "expected \"<->\"");
                }
            }
            '0'..='9' => {
                let mut s = String::new();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    s.push(chars[i]);
                    i += 1;
                }
                let n = BigUint::from_str(&s).expect("digits parse");
                toks.push((start, Tok::Num(n)));
            }
            'a'..='z' => {
                let mut s = String::new();
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_')
                {
                    s.push(chars[i]);
                    i += 1;
                }
                let tok = match s.as_str() {
                    "false" => Tok::False,
                    "true" => Tok::True,
                    _ => Tok::Ident(s),
                };
                toks.push((start, tok));
            }
            _ => return err(start, format!("unexpected character {c:?}")),
        }
    }
    Ok(toks)
}

/// What the two languages plug into the shared expression parser.
trait Lang {
    type F: Clone;
    fn bot() -> Self::F;
    fn not(x: Self::F) -> Self::F;
    fn and(l: Self::F, r: Self::F) -> Self::F;
    fn or(l: Self::F, r: Self::F) -> Self::F;
    fn imp(l: Self::F, r: Self::F) -> Self::F;
    /// Box prefix; `None` if the language has no modality.
    fn boxed(x: Self::F) -> Option<Self::F>;
    fn atom(p: &mut Parser, pos: usize, name: String) -> Result<Self::F, ParseError>;
}

struct Modal;

impl Lang for Modal {
    type F = Formula;
    fn bot() -> Formula {
        Formula::Bot
    }
    fn not(x: Formula) -> Formula {
        x.not()
    }
    fn and(l: Formula, r: Formula) -> Formula {
        l.and(r)
    }
    fn or(l: Formula, r: Formula) -> Formula {
        l.or(r)
    }
    fn imp(l: Formula, r: Formula) -> Formula {
        l.imp(r)
    }
    fn boxed(x: Formula) -> Option<Formula> {
        Some(x.boxed())
    }
    fn atom(_: &mut Parser, _: usize, name: String) -> Result<Formula, ParseError> {
        Ok(Formula::Atom(name))
    }
}

struct Toy;

impl Lang for Toy {
    type F = ToyFormula;
    fn bot() -> ToyFormula {
        ToyFormula::Bot
    }
    fn not(x: ToyFormula) -> ToyFormula {
        x.not()
    }
    fn and(l: ToyFormula, r: ToyFormula) -> ToyFormula {
        l.and(r)
    }
    fn or(l: ToyFormula, r: ToyFormula) -> ToyFormula {
        l.or(r)
    }
    fn imp(l: ToyFormula, r: ToyFormula) -> ToyFormula {
        l.imp(r)
    }
    fn boxed(_: ToyFormula) -> Option<ToyFormula> {
        None
    }
    fn atom(p: &mut Parser, pos: usize, name: String) -> Result<ToyFormula, ParseError> {
        match name.as_str() {
            "falsum" => Ok(ToyFormula::Falsum),
            "lam" => {
                let n = p.expect_call_arg(pos, "lam")?;
                let i = u64::try_from(&n)
                    .map_err(|_| ParseError { pos, msg: "lam index too large".into() })?;
                if i == 0 {
                    return err(pos, "lam(0) is forbidden");
                }
                Ok(ToyFormula::Lam(i))
            }
            "pr" => {
                let n = p.expect_call_arg(pos, "pr")?;
                if n == BigUint::from(0u8) {
                    return err(pos, "pr(0) is not a formula code");
                }
                Ok(ToyFormula::BoxMarker(Code::from_big(n)))
            }
            _ => Ok(ToyFormula::Letter(name)),
        }
    }
}

pub(crate) struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn new(input: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(input)?, pos: 0, end: input.chars().count() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<(usize, Tok)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if self.peek() == Some(want) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_call_arg(&mut self, pos: usize, head: &str) -> Result<BigUint, ParseError> {
        if !self.eat(&Tok::LParen) {
            return err(pos, format!("{head} expects a parenthesized index, e.g. {head}(1)"));
        }
        let n = match self.bump() {
            Some((_, Tok::Num(n))) => n,
            other => {
                let p = other.map(|(p, _)| p).unwrap_or(self.end);
                return err(p, format!("{head}(...) expects a number"));
            }
        };
        if !self.eat(&Tok::RParen) {
            return err(self.here(), "expected \")\"");
        }
        Ok(n)
    }

    fn parse_iff<L: Lang>(&mut self) -> Result<L::F, ParseError> {
        let lhs = self.parse_imp::<L>()?;
        if self.eat(&Tok::Iff) {
            let rhs = self.parse_iff::<L>()?;
            Ok(L::and(
                L::imp(lhs.clone(), rhs.clone()),
                L::imp(rhs, lhs),
            ))
        } else {
            Ok(lhs)
        }
    }

    fn parse_imp<L: Lang>(&mut self) -> Result<L::F, ParseError> {
        let lhs = self.parse_or::<L>()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.parse_imp::<L>()?;
            Ok(L::imp(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn parse_or<L: Lang>(&mut self) -> Result<L::F, ParseError> {
        let mut lhs = self.parse_and::<L>()?;
        while self.eat(&Tok::Pipe) {
            let rhs = self.parse_and::<L>()?;
            lhs = L::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_and<L: Lang>(&mut self) -> Result<L::F, ParseError> {
        let mut lhs = self.parse_unary::<L>()?;
        while self.eat(&Tok::Amp) {
            let rhs = self.parse_unary::<L>()?;
            lhs = L::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_unary<L: Lang>(&mut self) -> Result<L::F, ParseError> {
        match self.peek() {
            Some(Tok::Tilde) => {
                self.pos += 1;
                Ok(L::not(self.parse_unary::<L>()?))
            }
            Some(Tok::BoxOp) => {
                let p = self.here();
                self.pos += 1;
                let inner = self.parse_unary::<L>()?;
                L::boxed(inner).map_or_else(
                    || err(p, "the box operator is not part of this language"),
                    Ok,
                )
            }
            _ => self.parse_primary::<L>(),
        }
    }

    fn parse_primary<L: Lang>(&mut self) -> Result<L::F, ParseError> {
        match self.bump() {
            Some((_, Tok::False)) => Ok(L::bot()),
            Some((_, Tok::True)) => Ok(L::not(L::bot())),
            Some((p, Tok::Ident(name))) => L::atom(self, p, name),
            Some((_, Tok::LParen)) => {
                let inner = self.parse_iff::<L>()?;
                if self.eat(&Tok::RParen) {
                    Ok(inner)
                } else {
                    err(self.here(), "expected \")\"")
                }
            }
            Some((p, tok)) => err(p, format!("unexpected token {tok:?}")),
            None => err(self.end, "unexpected end of input"),
        }
    }

    fn finish<T>(mut self, value: T) -> Result<T, ParseError>
    where
        T: Sized,
    {
        match self.bump() {
            None => Ok(value),
            Some((p, tok)) => err(p, format!("trailing input starting with {tok:?}")),
        }
    }
}

pub fn parse_formula(input: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(input)?;
    let f = p.parse_iff::<Modal>()?;
    p.finish(f)
}

pub fn parse_toy(input: &str) -> Result<ToyFormula, ParseError> {
    let mut p = Parser::new(input)?;
    let f = p.parse_iff::<Toy>()?;
    p.finish(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_atoms() {
        assert_eq!(parse_toy("falsum").unwrap(), ToyFormula::Falsum);
        assert_eq!(parse_toy("lam(3)").unwrap(), ToyFormula::Lam(3));
        assert_eq!(
            parse_toy("pr(123)").unwrap(),
            ToyFormula::BoxMarker(Code::from_u64(123))
        );
        assert_eq!(parse_toy("x").unwrap(), ToyFormula::Letter("x".into()));
        assert!(parse_toy("lam(0)").is_err());
        assert!(parse_toy("lam").is_err());
        assert!(parse_toy("[]x").is_err());
    }

    #[test]
    fn toy_compound() {
        let f = parse_toy("lam(2) -> ~falsum & x").unwrap();
        assert_eq!(
            f,
            ToyFormula::Lam(2).imp(ToyFormula::Falsum.not().and(ToyFormula::Letter("x".into())))
        );
    }

    #[test]
    fn modal_rejects_numbers() {
        assert!(parse_formula("p & 3").is_err());
    }
}
