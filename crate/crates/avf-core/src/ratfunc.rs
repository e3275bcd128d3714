//! Rational functions as reduced fractions of polynomials.
//!
//! There is no multivariate gcd here. Reduction is limited to cancelling the
//! common monomial content and detecting exact division in either direction;
//! the denominator is kept monic in graded lex. Consequently the stored form
//! is not a full canonical form and equality is decided by cross
//! multiplication, which is exact.

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::vars::{same_vars, VarSet};
use crate::Rational;
use num::{One, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        assert!(same_vars(num.vars(), den.vars()));
        Ok(Self::normalized(num, den))
    }

    fn normalized(num: Polynomial, den: Polynomial) -> Self {
        debug_assert!(!den.is_zero());
        if num.is_zero() {
            return RationalFunction {
                den: Polynomial::one(num.vars()),
                num,
            };
        }
        let common = num.monomial_content().gcd(&den.monomial_content());
        let (mut num, mut den) = if common.is_one() {
            (num, den)
        } else {
            (num.divide_monomial(&common), den.divide_monomial(&common))
        };
        if let Some(q) = num.divide_exact(&den) {
            num = q;
            den = Polynomial::one(num.vars());
        } else if let Some(q) = den.divide_exact(&num) {
            den = q;
            num = Polynomial::one(den.vars());
        }
        let lc = den.leading().unwrap().1.clone();
        if !lc.is_one() {
            let inv = lc.recip();
            num = num.scale(&inv);
            den = den.scale(&inv);
        }
        RationalFunction { num, den }
    }

    pub fn from_poly(p: Polynomial) -> Self {
        RationalFunction {
            den: Polynomial::one(p.vars()),
            num: p,
        }
    }

    pub fn zero(vars: &VarSet) -> Self {
        Self::from_poly(Polynomial::zero(vars))
    }

    pub fn one(vars: &VarSet) -> Self {
        Self::from_poly(Polynomial::one(vars))
    }

    pub fn constant(vars: &VarSet, c: Rational) -> Self {
        Self::from_poly(Polynomial::constant(vars, c))
    }

    pub fn variable(vars: &VarSet, i: usize) -> Self {
        Self::from_poly(Polynomial::variable(vars, i))
    }

    pub fn vars(&self) -> &VarSet {
        self.num.vars()
    }

    pub fn numer(&self) -> &Polynomial {
        &self.num
    }

    pub fn denom(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Some(num) when the denominator reduced to 1.
    pub fn as_polynomial(&self) -> Option<&Polynomial> {
        self.den.is_one().then_some(&self.num)
    }

    pub fn recip(&self) -> Result<Self> {
        if self.num.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(Self::normalized(self.den.clone(), self.num.clone()))
    }

    pub fn div(&self, rhs: &Self) -> Result<Self> {
        Ok(self * &rhs.recip()?)
    }

    pub fn pow_u(&self, e: u32) -> Self {
        if e == 0 {
            return Self::one(self.vars());
        }
        Self::normalized(self.num.pow(e), self.den.pow(e))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::normalized(self.num.scale(c), self.den.clone())
    }

    /// Partial derivative by the quotient rule.
    pub fn partial(&self, i: usize) -> Self {
        let n = &(&self.num.partial(i) * &self.den) - &(&self.num * &self.den.partial(i));
        Self::normalized(n, &self.den * &self.den)
    }

    pub fn eval(&self, point: &[Rational]) -> Result<Rational> {
        let d = self.den.eval(point);
        if d.is_zero() {
            return Err(Error::UndefinedValue {
                what: self.to_string(),
            });
        }
        Ok(self.num.eval(point) / d)
    }

    /// Substitutes rational functions for the variables.
    pub fn subst_rf(&self, images: &[RationalFunction]) -> Result<Self> {
        let n = self.num.subst_rf(images);
        let d = self.den.subst_rf(images);
        if d.is_zero() {
            return Err(Error::UndefinedValue {
                what: self.to_string(),
            });
        }
        n.div(&d)
    }
}

impl PartialEq for RationalFunction {
    /// Cross multiplication; exact and independent of the stored reduction.
    fn eq(&self, other: &Self) -> bool {
        &self.num * &other.den == &other.num * &self.den
    }
}

impl Eq for RationalFunction {}

impl Add for &RationalFunction {
    type Output = RationalFunction;
    fn add(self, rhs: &RationalFunction) -> RationalFunction {
        RationalFunction::normalized(
            &(&self.num * &rhs.den) + &(&rhs.num * &self.den),
            &self.den * &rhs.den,
        )
    }
}

impl Sub for &RationalFunction {
    type Output = RationalFunction;
    fn sub(self, rhs: &RationalFunction) -> RationalFunction {
        RationalFunction::normalized(
            &(&self.num * &rhs.den) - &(&rhs.num * &self.den),
            &self.den * &rhs.den,
        )
    }
}

impl Mul for &RationalFunction {
    type Output = RationalFunction;
    fn mul(self, rhs: &RationalFunction) -> RationalFunction {
        RationalFunction::normalized(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl Neg for &RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        RationalFunction {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            return write!(f, "{}", self.num);
        }
        if self.num.nterms() > 1 {
            write!(f, "({})", self.num)?;
        } else {
            write!(f, "{}", self.num)?;
        }
        // denominator may go bare only when it is a single unit-coefficient
        // power of one variable; anything else needs parentheses to reparse
        let bare = self.den.nterms() == 1 && {
            let (m, c) = self.den.leading().unwrap();
            c.is_one() && m.exps().iter().filter(|&&e| e > 0).count() == 1
        };
        if bare {
            write!(f, "/{}", self.den)
        } else {
            write!(f, "/({})", self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vars::varset;

    fn vs() -> VarSet {
        varset(&["x", "y"]).unwrap()
    }

    fn var(i: usize) -> Polynomial {
        Polynomial::variable(&vs(), i)
    }

    #[test]
    fn monomial_content_cancels() {
        // (x^2 y + x y^2)/(x y) reduces to x + y over denominator 1
        let x = var(0);
        let y = var(1);
        let num = &(&(&x * &x) * &y) + &(&x * &(&y * &y));
        let den = &x * &y;
        let r = RationalFunction::new(num, den).unwrap();
        assert_eq!(r.as_polynomial().unwrap(), &(&x + &y));
    }

    #[test]
    fn exact_division_detected_both_ways() {
        let x = var(0);
        let y = var(1);
        let d = &x - &y;
        let n = &(&x * &x) - &(&y * &y);
        let r = RationalFunction::new(n.clone(), d.clone()).unwrap();
        assert_eq!(r.as_polynomial().unwrap(), &(&x + &y));
        let r2 = RationalFunction::new(d, n).unwrap();
        assert!(r2.as_polynomial().is_none());
        assert_eq!(r2.denom(), &(&x + &y));
        assert!(r2.numer().is_one());
    }

    #[test]
    fn equality_is_cross_multiplication() {
        let x = var(0);
        let y = var(1);
        let one = Polynomial::one(&vs());
        // (x+y)/(x+1) vs (x^2 - y^2)/((x+1)(x-y))
        let a = RationalFunction::new(&x + &y, &x + &one).unwrap();
        let b = RationalFunction::new(
            &(&x * &x) - &(&y * &y),
            &(&x + &one) * &(&x - &y),
        )
        .unwrap();
        assert_eq!(a, b);
        let c = RationalFunction::new(&x + &y, x.clone()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn denominator_is_monic() {
        let x = var(0);
        let y = var(1);
        let r = RationalFunction::new(y.clone(), &x.scale(&Rational::new(2.into(), 1.into())) + &Polynomial::one(&vs())).unwrap();
        assert!(r.denom().leading().unwrap().1.is_one());
        let back = r.eval(&[Rational::new(3.into(), 1.into()), Rational::new(1.into(), 1.into())]).unwrap();
        assert_eq!(back, Rational::new(1.into(), 7.into()));
    }

    #[test]
    fn derivative_quotient_rule() {
        let x = var(0);
        let y = var(1);
        // d/dx of (x^2/y) is 2x/y
        let r = RationalFunction::new(&x * &x, y.clone()).unwrap();
        let d = r.partial(0);
        let expect = RationalFunction::new(x.scale(&Rational::new(2.into(), 1.into())), y).unwrap();
        assert_eq!(d, expect);
    }

    #[test]
    fn display_round_trip_shapes() {
        let x = var(0);
        let y = var(1);
        let one = Polynomial::one(&vs());
        let r = RationalFunction::new(&(&one - &x) - &y, &x * &y).unwrap();
        assert_eq!(r.to_string(), "(-x - y + 1)/(x*y)");
        let s = RationalFunction::new(one.clone(), &x * &y).unwrap();
        assert_eq!(s.to_string(), "1/(x*y)");
        let t = RationalFunction::new(one, x.pow(2)).unwrap();
        assert_eq!(t.to_string(), "1/x^2");
    }
}
