//! Sparse multivariate polynomials over arbitrary-precision rationals.
//!
//! Terms live in a `BTreeMap` keyed by graded-lex monomials, so iteration is
//! already sorted and the canonical form is unique: no zero coefficients, the
//! zero polynomial is the empty map. All binary operations require operands
//! over the same varset; the parsing and file-loading layers guarantee this
//! for external input, so a mismatch here is a programming error and panics.
//!
//! Key operations: ring arithmetic, partial derivatives, substitution by
//! polynomials or rational functions, exact evaluation, exact division by a
//! single divisor (used for rational-function normalization).

use crate::monomial::Monomial;
use crate::ratfunc::RationalFunction;
use crate::vars::{same_vars, VarSet};
use crate::Rational;
use num::traits::Signed;
use num::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

pub fn rat_pow(q: &Rational, mut e: u32) -> Rational {
    let mut base = q.clone();
    let mut acc = Rational::one();
    while e > 0 {
        if e & 1 == 1 {
            acc *= &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    vars: VarSet,
    terms: BTreeMap<Monomial, Rational>,
}

impl Polynomial {
    pub fn zero(vars: &VarSet) -> Self {
        Polynomial {
            vars: vars.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn one(vars: &VarSet) -> Self {
        Self::constant(vars, Rational::one())
    }

    pub fn constant(vars: &VarSet, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(vars.len()), c);
        }
        Polynomial {
            vars: vars.clone(),
            terms,
        }
    }

    pub fn int(vars: &VarSet, n: i64) -> Self {
        Self::constant(vars, Rational::from_integer(n.into()))
    }

    pub fn variable(vars: &VarSet, i: usize) -> Self {
        assert!(i < vars.len());
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::var(vars.len(), i, 1), Rational::one());
        Polynomial {
            vars: vars.clone(),
            terms,
        }
    }

    pub fn term(vars: &VarSet, m: Monomial, c: Rational) -> Self {
        assert_eq!(m.nvars(), vars.len());
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Polynomial {
            vars: vars.clone(),
            terms,
        }
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.constant_value().map(|c| c.is_one()).unwrap_or(false)
    }

    pub fn nterms(&self) -> usize {
        self.terms.len()
    }

    /// Some(c) when the polynomial is the constant c (including 0).
    pub fn constant_value(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|m| m.exp(i)).max().unwrap_or(0)
    }

    /// Leading term in graded lex.
    pub fn leading(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().next_back()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn terms_desc(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter().rev()
    }

    pub fn coeff(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    fn insert_add(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get() + &c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(&self.vars);
        }
        Polynomial {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    /// self * (c * m) for a single term.
    pub fn mul_term(&self, m: &Monomial, c: &Rational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(&self.vars);
        }
        Polynomial {
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .map(|(mm, a)| (mm.mul(m), a * c))
                .collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut acc = Polynomial::one(&self.vars);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn partial(&self, i: usize) -> Polynomial {
        let mut out = Polynomial::zero(&self.vars);
        for (m, c) in &self.terms {
            let e = m.exp(i);
            if e == 0 {
                continue;
            }
            let mut exps = m.exps().to_vec();
            exps[i] = e - 1;
            out.insert_add(
                Monomial::from_exps(exps),
                c * Rational::from_integer(e.into()),
            );
        }
        out
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        assert_eq!(point.len(), self.vars.len());
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in m.exps().iter().enumerate() {
                if e > 0 {
                    t *= rat_pow(&point[i], e);
                }
            }
            acc += t;
        }
        acc
    }

    /// Substitutes `images[i]` for variable i; images share one target varset.
    pub fn subst(&self, images: &[Polynomial]) -> Polynomial {
        assert_eq!(images.len(), self.vars.len());
        let target = images
            .first()
            .map(|p| p.vars().clone())
            .unwrap_or_else(|| self.vars.clone());
        let mut acc = Polynomial::zero(&target);
        for (m, c) in &self.terms {
            let mut t = Polynomial::constant(&target, c.clone());
            for (i, &e) in m.exps().iter().enumerate() {
                if e > 0 {
                    t = &t * &images[i].pow(e);
                }
            }
            acc = &acc + &t;
        }
        acc
    }

    /// Substitutes rational functions for the variables.
    pub fn subst_rf(&self, images: &[RationalFunction]) -> RationalFunction {
        assert_eq!(images.len(), self.vars.len());
        let target = images
            .first()
            .map(|r| r.vars().clone())
            .unwrap_or_else(|| self.vars.clone());
        let mut acc = RationalFunction::zero(&target);
        for (m, c) in &self.terms {
            let mut t = RationalFunction::constant(&target, c.clone());
            for (i, &e) in m.exps().iter().enumerate() {
                if e > 0 {
                    t = &t * &images[i].pow_u(e);
                }
            }
            acc = &acc + &t;
        }
        acc
    }

    /// Reinterprets the polynomial over a varset containing the same names.
    pub fn map_to(&self, target: &VarSet) -> Polynomial {
        if same_vars(&self.vars, target) {
            return self.clone();
        }
        let idx: Vec<usize> = self
            .vars
            .names()
            .iter()
            .map(|n| {
                target
                    .index(n)
                    .unwrap_or_else(|| panic!("variable `{n}` missing from target varset"))
            })
            .collect();
        let mut out = Polynomial::zero(target);
        for (m, c) in &self.terms {
            let mut exps = vec![0u32; target.len()];
            for (i, &e) in m.exps().iter().enumerate() {
                exps[idx[i]] = e;
            }
            out.insert_add(Monomial::from_exps(exps), c.clone());
        }
        out
    }

    /// Componentwise-min exponent vector over all terms; one() for 0.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        let first = match it.next() {
            Some(m) => m.clone(),
            None => return Monomial::one(self.vars.len()),
        };
        it.fold(first, |acc, m| acc.gcd(m))
    }

    pub fn divide_monomial(&self, m: &Monomial) -> Polynomial {
        Polynomial {
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .map(|(mm, c)| (m.quotient_into(mm), c.clone()))
                .collect(),
        }
    }

    /// Exact quotient self/divisor, or None when the division leaves a
    /// remainder. Leading-term driven, so a successful run is a proof.
    pub fn divide_exact(&self, divisor: &Polynomial) -> Option<Polynomial> {
        assert!(!divisor.is_zero());
        let (dm, dc) = divisor.leading().unwrap();
        let (dm, dc) = (dm.clone(), dc.clone());
        let mut rem = self.clone();
        let mut quot = Polynomial::zero(&self.vars);
        while let Some((rm, rc)) = rem.leading() {
            if !dm.divides(rm) {
                return None;
            }
            let qm = dm.quotient_into(rm);
            let qc = rc / &dc;
            rem = &rem - &divisor.mul_term(&qm, &qc);
            quot.insert_add(qm, qc);
        }
        Some(quot)
    }

    /// Scales so the graded-lex leading coefficient is 1; identity on 0.
    pub fn monic(&self) -> Polynomial {
        match self.leading() {
            None => self.clone(),
            Some((_, c)) => self.scale(&c.recip()),
        }
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert!(
            same_vars(&self.vars, &rhs.vars),
            "polynomial varsets differ: [{}] vs [{}]",
            self.vars,
            rhs.vars
        );
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.insert_add(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        assert!(
            same_vars(&self.vars, &rhs.vars),
            "polynomial varsets differ: [{}] vs [{}]",
            self.vars,
            rhs.vars
        );
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.insert_add(m.clone(), -c.clone());
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert!(
            same_vars(&self.vars, &rhs.vars),
            "polynomial varsets differ: [{}] vs [{}]",
            self.vars,
            rhs.vars
        );
        let mut out = Polynomial::zero(&self.vars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.insert_add(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }
}

fn fmt_coeff(c: &Rational) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn fmt_monomial(vars: &VarSet, m: &Monomial) -> String {
    let mut parts = Vec::new();
    for (i, &e) in m.exps().iter().enumerate() {
        match e {
            0 => {}
            1 => parts.push(vars.name(i).to_string()),
            _ => parts.push(format!("{}^{}", vars.name(i), e)),
        }
    }
    parts.join("*")
}

/// Canonical form: graded-lex descending, ` + `/` - ` separators, unit
/// coefficients omitted on non-constant terms. Round-trips through the parser.
impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let abs = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let ms = fmt_monomial(&self.vars, m);
            if ms.is_empty() {
                write!(f, "{}", fmt_coeff(&abs))?;
            } else if abs.is_one() {
                write!(f, "{ms}")?;
            } else {
                write!(f, "{}*{}", fmt_coeff(&abs), ms)?;
            }
        }
        Ok(())
    }
}
