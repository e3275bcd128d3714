//! Exact computer algebra for polynomial vector fields on affine varieties.
//!
//! The crate provides, over arbitrary-precision rationals:
//!
//! - sparse multivariate polynomials and restricted rational functions
//!   (`poly`, `ratfunc`) with a canonical graded-lex text form (`parse`);
//! - coordinate rings with Groebner normal forms, ideal membership, and
//!   unit-ideal cofactor certificates (`variety`);
//! - vector fields as derivations: application, Lie brackets, tangency
//!   cofactor certificates, pointwise tangent-space span checks
//!   (`derivation`);
//! - chart volume forms and exact divergence (`volume`);
//! - integrability certificates for locally nilpotent and kernel-linear
//!   fields, exact and high-precision flows, automorphism verification
//!   (`flow`);
//! - compatible-pair evidence, bounded Lie-closure spans, and constructive
//!   transitivity plans (`density`).
//!
//! `families` constructs the stock varieties and field families the shipped
//! corpus exercises; `files` defines the JSON exchange formats.

pub mod density;
pub mod derivation;
pub mod error;
pub mod families;
pub mod files;
pub mod flow;
pub mod linalg;
pub mod monomial;
pub mod numeric;
pub mod parse;
pub mod poly;
pub mod ratfunc;
pub mod sample;
pub mod vars;
pub mod variety;
pub mod volume;

pub type Rational = num::BigRational;

pub use error::{Error, Result};
pub use poly::Polynomial;
pub use ratfunc::RationalFunction;
pub use vars::{varset, VarSet};
pub use variety::{CoordinateRing, Point, Ring, RingElement};
