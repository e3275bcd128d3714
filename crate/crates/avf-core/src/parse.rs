//! Expression parser for the text surface.
//!
//! Grammar (no implicit multiplication, `^` takes a literal natural):
//!
//! ```text
//! expr    := term (('+'|'-') term)*
//! term    := factor (('*'|'/') factor)*
//! factor  := '-' factor | primary ('^' natural)?
//! primary := natural | identifier | '(' expr ')'
//! ```
//!
//! `/` divides by the following factor only, so denominators are products of
//! identifiers, naturals, and parenthesized polynomials, matching the printer.
//! Identifiers are resolved against a fixed varset; anything unknown is an
//! error with its byte position.

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::ratfunc::RationalFunction;
use crate::vars::VarSet;
use crate::Rational;
use num::BigInt;

const MAX_EXPONENT: u64 = 4096;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            '-' => {
                toks.push((Tok::Minus, i));
                i += 1;
            }
            '*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            '/' => {
                toks.push((Tok::Slash, i));
                i += 1;
            }
            '^' => {
                toks.push((Tok::Caret, i));
                i += 1;
            }
            '(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n: BigInt = src[start..i].parse().expect("digit run parses");
                toks.push((Tok::Num(n), start));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                return Err(Error::Syntax {
                    pos: i,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    i: usize,
    vars: &'a VarSet,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.i).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.i).map(|(t, _)| t.clone());
        if t.is_some() {
            self.i += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&t) {
            self.i += 1;
            Ok(())
        } else {
            Err(Error::Syntax {
                pos: self.pos(),
                msg: format!("expected {what}"),
            })
        }
    }

    fn expr(&mut self) -> Result<RationalFunction> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.i += 1;
                    acc = &acc + &self.term()?;
                }
                Some(Tok::Minus) => {
                    self.i += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<RationalFunction> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.i += 1;
                    acc = &acc * &self.factor()?;
                }
                Some(Tok::Slash) => {
                    let pos = self.pos();
                    self.i += 1;
                    let rhs = self.factor()?;
                    acc = acc.div(&rhs).map_err(|_| Error::Syntax {
                        pos,
                        msg: "division by zero".into(),
                    })?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<RationalFunction> {
        if self.peek() == Some(&Tok::Minus) {
            self.i += 1;
            return Ok(-&self.factor()?);
        }
        let base = self.primary()?;
        if self.peek() == Some(&Tok::Caret) {
            self.i += 1;
            let pos = self.pos();
            match self.bump() {
                Some(Tok::Num(n)) => {
                    let e: u64 = n.try_into().map_err(|_| Error::Syntax {
                        pos,
                        msg: "exponent out of range".into(),
                    })?;
                    if e > MAX_EXPONENT {
                        return Err(Error::Syntax {
                            pos,
                            msg: format!("exponent exceeds {MAX_EXPONENT}"),
                        });
                    }
                    Ok(base.pow_u(e as u32))
                }
                _ => Err(Error::Syntax {
                    pos,
                    msg: "expected a natural number after ^".into(),
                }),
            }
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<RationalFunction> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Num(n)) => Ok(RationalFunction::constant(
                self.vars,
                Rational::from_integer(n),
            )),
            Some(Tok::Ident(name)) => match self.vars.index(&name) {
                Some(i) => Ok(RationalFunction::variable(self.vars, i)),
                None => Err(Error::UnknownVariable { name, pos }),
            },
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(Error::Syntax {
                pos,
                msg: "expected a number, variable, or `(`".into(),
            }),
        }
    }
}

/// Parses an expression into a rational function over `vars`.
pub fn parse_expression(vars: &VarSet, src: &str) -> Result<RationalFunction> {
    let toks = tokenize(src)?;
    let mut p = Parser {
        toks,
        i: 0,
        vars,
        end: src.len(),
    };
    let r = p.expr()?;
    if p.i != p.toks.len() {
        return Err(Error::Syntax {
            pos: p.pos(),
            msg: "trailing input".into(),
        });
    }
    Ok(r)
}

/// As `parse_expression`, but requires the result to be a polynomial.
pub fn parse_polynomial(vars: &VarSet, src: &str) -> Result<Polynomial> {
    let r = parse_expression(vars, src)?;
    match r.as_polynomial() {
        Some(p) => Ok(p.clone()),
        None => Err(Error::NotPolynomial {
            den: r.denom().to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vars::varset;

    fn vs() -> VarSet {
        varset(&["x", "y", "z"]).unwrap()
    }

    #[test]
    fn parses_the_surface_relation() {
        let p = parse_polynomial(&vs(), "x+y+x*y*z-1").unwrap();
        assert_eq!(p.to_string(), "x*y*z + x + y - 1");
    }

    #[test]
    fn rational_constants_via_division() {
        let p = parse_polynomial(&vs(), "1/2*x^2 - 3/4").unwrap();
        assert_eq!(p.to_string(), "1/2*x^2 - 3/4");
    }

    #[test]
    fn division_binds_to_one_factor() {
        // a/b*c is (a/b)*c, and x/x*y reduces to y
        let r = parse_expression(&vs(), "x/x*y").unwrap();
        assert_eq!(r.as_polynomial().unwrap().to_string(), "y");
        let s = parse_expression(&vs(), "1/(x*y)").unwrap();
        assert_eq!(s.to_string(), "1/(x*y)");
    }

    #[test]
    fn no_implicit_multiplication() {
        let e = parse_expression(&vs(), "2 x").unwrap_err();
        assert!(matches!(e, Error::Syntax { pos: 2, .. }), "{e}");
    }

    #[test]
    fn unknown_variable_carries_position() {
        let e = parse_expression(&vs(), "x + w^2").unwrap_err();
        match e {
            Error::UnknownVariable { name, pos } => {
                assert_eq!(name, "w");
                assert_eq!(pos, 4);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn zero_denominator_rejected() {
        let e = parse_expression(&vs(), "1/(x-x)").unwrap_err();
        assert!(matches!(e, Error::Syntax { .. }), "{e}");
    }

    #[test]
    fn unary_minus_and_powers() {
        let p = parse_polynomial(&vs(), "-x^2 + -(y)").unwrap();
        assert_eq!(p.to_string(), "-x^2 - y");
    }

    #[test]
    fn print_parse_round_trip() {
        for src in [
            "x*y*z + x + y - 1",
            "-3/2*x^2 + y + 7",
            "(-x - y + 1)/(x*y)",
            "1/x^2",
            "0",
        ] {
            let r = parse_expression(&vs(), src).unwrap();
            assert_eq!(r.to_string(), src);
            let again = parse_expression(&vs(), &r.to_string()).unwrap();
            assert_eq!(again, r);
        }
    }
}
