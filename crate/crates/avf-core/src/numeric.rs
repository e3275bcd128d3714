//! High-precision numerics built directly on exact rationals.
//!
//! Flow evaluation only ever needs `exp` at rational arguments. That is
//! computed by argument halving plus Taylor summation in exact rational
//! arithmetic, then rounded to a dyadic rational with the requested number of
//! bits. Everything downstream (residuals, norms, Newton steps) stays in
//! `Rational`, so tolerance comparisons are exact and there is no float
//! rounding model to reason about.

use crate::Rational;
use num::bigint::BigInt;
use num::traits::Signed;
use num::{One, Zero};

fn bit_length(n: &BigInt) -> i64 {
    n.bits() as i64
}

fn div_round_nearest(a: &BigInt, b: &BigInt) -> BigInt {
    // b > 0; rounds half away from zero
    debug_assert!(b.is_positive());
    let two = BigInt::from(2);
    if a.is_negative() {
        -((-a * &two + b) / (b * &two))
    } else {
        (a * &two + b) / (b * &two)
    }
}

/// Nearest dyadic rational with roughly `bits` significant bits.
pub fn round_dyadic(q: &Rational, bits: u32) -> Rational {
    if q.is_zero() {
        return Rational::zero();
    }
    let mag = bit_length(q.numer()) - bit_length(q.denom());
    let shift = bits as i64 - mag;
    if shift >= 0 {
        let scaled = q.numer() << shift as u64;
        let m = div_round_nearest(&scaled, q.denom());
        Rational::new(m, BigInt::one() << shift as u64)
    } else {
        let scaled_den = q.denom() << (-shift) as u64;
        let m = div_round_nearest(q.numer(), &scaled_den);
        Rational::new(m << (-shift) as u64, BigInt::one())
    }
}

/// exp(x) to about `bits` binary digits of relative accuracy.
pub fn exp_rational(x: &Rational, bits: u32) -> Rational {
    if x.is_zero() {
        return Rational::one();
    }
    // halve until |y| <= 1/2 so the series converges fast
    let mag = bit_length(x.numer()) - bit_length(x.denom());
    let k = (mag + 2).max(0) as u32;
    let work = bits + k + 24;
    // rounding the argument and every term to dyadics keeps the series in
    // small power-of-two denominators; the per-term error stays far below
    // the final rounding and the argument may be arbitrarily large exactly
    let y = round_dyadic(
        &(x / Rational::from_integer(BigInt::one() << k as u64)),
        work,
    );

    let cutoff = Rational::new(BigInt::one(), BigInt::one() << work as u64);
    let mut sum = Rational::one();
    let mut term = Rational::one();
    let mut j: u32 = 1;
    loop {
        term = round_dyadic(
            &(term * &y / Rational::from_integer(BigInt::from(j))),
            work,
        );
        if term.is_zero() || term.abs() < cutoff {
            break;
        }
        sum += &term;
        j += 1;
        assert!(j < 4 * work + 64, "exp series failed to converge");
    }
    sum = round_dyadic(&sum, work);
    for _ in 0..k {
        sum = round_dyadic(&(&sum * &sum), work);
    }
    round_dyadic(&sum, bits + 8)
}

/// Integer power with negative exponents allowed; base must be nonzero for
/// negative exponents.
pub fn rat_pow_i(q: &Rational, e: i64) -> Rational {
    let p = crate::poly::rat_pow(q, e.unsigned_abs() as u32);
    if e < 0 {
        p.recip()
    } else {
        p
    }
}

/// Parses decimal or scientific notation ("0.25", "1e-9", "-3") exactly.
pub fn parse_decimal(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (sign, rest) = match s.strip_prefix('-') {
        Some(r) => (-1, r),
        None => (1, s.strip_prefix('+').unwrap_or(s)),
    };
    let (mantissa, exp10) = match rest.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = rest[i + 1..].parse().ok()?;
            (&rest[..i], e)
        }
        None => (rest, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mantissa_int: BigInt = if digits.is_empty() {
        return None;
    } else {
        digits.parse().ok()?
    };
    let shift = exp10 - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let base = num::pow::pow(ten, shift.unsigned_abs() as usize);
    let q = if shift >= 0 {
        Rational::from_integer(mantissa_int * base)
    } else {
        Rational::new(mantissa_int, base)
    };
    Some(q * Rational::from_integer(BigInt::from(sign)))
}

/// Parses "3/4", "-7/3", plain integers, or decimal notation, all exactly.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let t = s.trim();
    if let Some((n, d)) = t.split_once('/') {
        let num: BigInt = n.trim().parse().ok()?;
        let den: BigInt = d.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        Some(Rational::new(num, den))
    } else {
        parse_decimal(t)
    }
}

/// Fixed-point decimal rendering with `digits` fractional digits.
pub fn decimal_string(q: &Rational, digits: usize) -> String {
    let ten = BigInt::from(10);
    let scale = num::pow::pow(ten.clone(), digits);
    let scaled = q * Rational::from_integer(scale.clone());
    let m = div_round_nearest(scaled.numer(), scaled.denom());
    let neg = m.is_negative();
    let m = m.abs();
    let (int_part, frac_part) = (&m / &scale, &m % &scale);
    let frac_str = format!("{:0>width$}", frac_part.to_string(), width = digits);
    let sign = if neg { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_str}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn dyadic_rounding_is_close() {
        let x = q(1, 3);
        let r = round_dyadic(&x, 64);
        assert!((&r - &x).abs() < q(1, 1) / Rational::from_integer(BigInt::one() << 62));
        // result is exactly representable with a power-of-two denominator
        let d = r.denom();
        assert_eq!(d & (d - BigInt::one()), BigInt::zero());
    }

    #[test]
    fn exp_matches_reference_e() {
        // first 60 decimals of e
        let e_ref = parse_decimal("2.718281828459045235360287471352662497757247093699959574966968").unwrap();
        let got = exp_rational(&Rational::one(), 160);
        assert!((&got - &e_ref).abs() < q(1, 1) / Rational::from_integer(BigInt::one() << 150));
    }

    #[test]
    fn exp_addition_law_to_precision() {
        let a = q(7, 5);
        let b = q(-13, 11);
        let lhs = exp_rational(&(&a + &b), 200);
        let rhs = exp_rational(&a, 200) * exp_rational(&b, 200);
        let tol = q(1, 1) / Rational::from_integer(BigInt::one() << 190);
        assert!((&lhs - &rhs).abs() < tol, "difference {}", decimal_string(&(&lhs - &rhs), 70));
    }

    #[test]
    fn exp_of_negative_is_reciprocal() {
        let a = q(3, 2);
        let lhs = exp_rational(&-a.clone(), 180);
        let rhs = exp_rational(&a, 180).recip();
        let tol = q(1, 1) / Rational::from_integer(BigInt::one() << 170);
        assert!((&lhs - &rhs).abs() < tol);
    }

    #[test]
    fn decimal_parsing_exact() {
        assert_eq!(parse_decimal("1e-9").unwrap(), q(1, 1_000_000_000));
        assert_eq!(parse_decimal("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_decimal("-3").unwrap(), q(-3, 1));
        assert_eq!(parse_decimal("2.5e2").unwrap(), q(250, 1));
        assert!(parse_decimal("abc").is_none());
        assert_eq!(parse_rational("-7/3").unwrap(), q(-7, 3));
        assert_eq!(parse_rational("1e-2").unwrap(), q(1, 100));
        assert!(parse_rational("1/0").is_none());
    }

    #[test]
    fn decimal_rendering_rounds() {
        assert_eq!(decimal_string(&q(1, 3), 6), "0.333333");
        assert_eq!(decimal_string(&q(-1, 8), 3), "-0.125");
        assert_eq!(decimal_string(&q(2, 3), 3), "0.667");
    }
}
