//! Seeded random generation of polynomials and variety points.
//!
//! Everything is deterministic given the seed, so randomized suites are
//! reproducible bit for bit. Points are produced from rational
//! parametrizations and land on their varieties exactly.

use crate::monomial::monomials_upto;
use crate::poly::Polynomial;
use crate::variety::{Point, Ring};
use crate::vars::VarSet;
use crate::Rational;
use num::{BigInt, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small nonzero rational with numerator in [-9, 9] and denominator in [1, 4].
pub fn small_rational<R: Rng>(rng: &mut R) -> Rational {
    let num = loop {
        let n = rng.gen_range(-9i64..=9);
        if n != 0 {
            break n;
        }
    };
    let den = rng.gen_range(1i64..=4);
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Random polynomial of total degree <= `degree` with at most `terms` terms,
/// supported on the listed variables of the set. Never the zero polynomial.
pub fn random_polynomial_in<R: Rng>(
    rng: &mut R,
    vars: &VarSet,
    allowed: &[usize],
    degree: u32,
    terms: usize,
) -> Polynomial {
    let shapes = monomials_upto(allowed.len(), degree);
    loop {
        let mut p = Polynomial::zero(vars);
        for _ in 0..terms.max(1) {
            let shape = shapes.choose(rng).expect("degree bound admits monomials");
            let mut exps = vec![0u32; vars.len()];
            for (pos, &v) in allowed.iter().enumerate() {
                exps[v] = shape.exp(pos);
            }
            let m = crate::monomial::Monomial::from_exps(exps);
            p = &p + &Polynomial::term(vars, m, small_rational(rng));
        }
        if !p.is_zero() {
            return p;
        }
    }
}

pub fn random_polynomial<R: Rng>(
    rng: &mut R,
    vars: &VarSet,
    degree: u32,
    terms: usize,
) -> Polynomial {
    let all: Vec<usize> = (0..vars.len()).collect();
    random_polynomial_in(rng, vars, &all, degree, terms)
}

/// Point on x + y + xyz = 1 with nonzero x and y, so it lies in the chart
/// where both coordinates are invertible.
pub fn random_s_point<R: Rng>(rng: &mut R, ring: &Ring) -> Point {
    loop {
        let x = small_rational(rng);
        let y = small_rational(rng);
        let xy = &x * &y;
        if xy.is_zero() {
            continue;
        }
        let z = (Rational::from_integer(1.into()) - &x - &y) / xy;
        if let Ok(p) = Point::new(ring, vec![x, y, z]) {
            return p;
        }
    }
}

/// Point on a1*b2 - a2*b1 = 1 solved for b2 from a nonzero a1.
pub fn random_sl2_point<R: Rng>(rng: &mut R, ring: &Ring) -> Point {
    loop {
        let a1 = small_rational(rng);
        let a2 = small_rational(rng);
        let b1 = small_rational(rng);
        let b2 = (Rational::from_integer(1.into()) + &a2 * &b1) / &a1;
        if let Ok(p) = Point::new(ring, vec![a1, a2, b1, b2]) {
            return p;
        }
    }
}

/// Point of an affine space (no relations to satisfy).
pub fn random_affine_point<R: Rng>(rng: &mut R, ring: &Ring) -> Point {
    let coords = (0..ring.vars().len())
        .map(|_| small_rational(rng))
        .collect();
    Point::new(ring, coords).expect("affine space has no relations")
}
