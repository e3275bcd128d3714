//! Integrable fields and their closed-form flows.
//!
//! Two decidable classes get flow certificates. Nilpotent fields (every
//! variable dies under iterated application within a bound) flow by a
//! terminating series, giving a polynomial map in the time variable.
//! Kernel-linear fields act on each moving variable v as a_v*v + b_v with
//! a_v, b_v first integrals, so each coordinate solves a scalar linear ODE
//! with frozen coefficients and the flow is exp(a_v t)*v + b_v*(exp(a_v t)-1)/a_v.
//! Everything else gets no flow.
//!
//! Evaluation stays in rational arithmetic throughout; exp-units are rounded
//! dyadically at a configurable precision, and branches that are exactly
//! rational (t = 0, a frozen coordinate, the a_v = 0 linear case) short-circuit
//! before any rounding happens.

use crate::derivation::VectorField;
use crate::error::{Error, Result};
use crate::linalg::QMatrix;
use crate::monomial::Monomial;
use crate::numeric::{exp_rational, round_dyadic};
use crate::poly::Polynomial;
use crate::ratfunc::RationalFunction;
use crate::variety::{reduce_full, require_same_ring, Point, Ring, RingElement};
use crate::vars::VarSet;
use crate::volume::ChartRef;
use crate::Rational;
use num::{One, Signed, Zero};
use std::fmt;

pub const DEFAULT_LND_BOUND: u32 = 64;

/// Result of a bounded iteration; `Exceeded` is inconclusive, never a proof.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Bounded<T> {
    Within(T),
    Exceeded { bound: u32 },
}

impl<T> Bounded<T> {
    pub fn within(self) -> Option<T> {
        match self {
            Bounded::Within(t) => Some(t),
            Bounded::Exceeded { .. } => None,
        }
    }

    pub fn is_exceeded(&self) -> bool {
        matches!(self, Bounded::Exceeded { .. })
    }
}

/// Nilpotency degree min{n-1 | v^n(a) = 0}; the zero element has degree -1.
pub fn lnd_degree(v: &VectorField, a: &RingElement, bound: u32) -> Result<Bounded<i64>> {
    require_same_ring(v.ring(), a.ring())?;
    if a.is_zero() {
        return Ok(Bounded::Within(-1));
    }
    let mut cur = a.clone();
    for n in 0..bound as i64 {
        cur = v.apply(&cur)?;
        if cur.is_zero() {
            return Ok(Bounded::Within(n));
        }
    }
    Ok(Bounded::Exceeded { bound })
}

#[derive(Debug, Clone)]
pub struct LndCertificate {
    /// degrees[i] is the nilpotency degree of variable i, so
    /// v^(degrees[i]+1)(x_i) = 0 and v^(degrees[i])(x_i) != 0.
    pub degrees: Vec<i64>,
    pub bound_used: u32,
}

impl LndCertificate {
    pub fn max_degree(&self) -> i64 {
        self.degrees.iter().copied().max().unwrap_or(-1)
    }

    /// Re-checks both defining identities per variable.
    pub fn verify(&self, v: &VectorField) -> Result<bool> {
        let ring = v.ring().clone();
        if self.degrees.len() != ring.vars().len() {
            return Ok(false);
        }
        for (i, &d) in self.degrees.iter().enumerate() {
            let mut cur = RingElement::variable(&ring, i);
            for _ in 0..d {
                cur = v.apply(&cur)?;
            }
            if d >= 0 && cur.is_zero() {
                return Ok(false);
            }
            if !v.apply(&cur)?.is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

pub fn lnd_certify(v: &VectorField, bound: u32) -> Result<Bounded<LndCertificate>> {
    let ring = v.ring().clone();
    let mut degrees = Vec::with_capacity(ring.vars().len());
    for i in 0..ring.vars().len() {
        match lnd_degree(v, &RingElement::variable(&ring, i), bound)? {
            Bounded::Within(d) => degrees.push(d),
            Bounded::Exceeded { bound } => return Ok(Bounded::Exceeded { bound }),
        }
    }
    Ok(Bounded::Within(LndCertificate {
        degrees,
        bound_used: bound,
    }))
}

#[derive(Debug, Clone)]
pub struct KernelLinearCertificate {
    /// pairs[i] = Some((a, b)) certifies v(x_i) = a*x_i + b with
    /// v(a) = v(b) = 0; None marks an invariant variable, v(x_i) = 0.
    pub pairs: Vec<Option<(RingElement, RingElement)>>,
}

impl KernelLinearCertificate {
    /// Names of the invariant variables (first integrals among generators).
    pub fn invariants(&self, ring: &Ring) -> Vec<String> {
        self.pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_none())
            .map(|(i, _)| ring.vars().name(i).to_string())
            .collect()
    }

    pub fn verify(&self, v: &VectorField) -> Result<bool> {
        let ring = v.ring().clone();
        if self.pairs.len() != ring.vars().len() {
            return Ok(false);
        }
        for (i, pair) in self.pairs.iter().enumerate() {
            let img = &v.coeffs()[i];
            match pair {
                None => {
                    if !img.is_zero() {
                        return Ok(false);
                    }
                }
                Some((a, b)) => {
                    require_same_ring(a.ring(), &ring)?;
                    require_same_ring(b.ring(), &ring)?;
                    let xi = RingElement::variable(&ring, i);
                    if !img.sub(&a.mul(&xi).add(b)).is_zero()
                        || !v.apply(a)?.is_zero()
                        || !v.apply(b)?.is_zero()
                    {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}

#[derive(Debug, Clone)]
pub enum KernelLinearOutcome {
    Certified(KernelLinearCertificate),
    /// Variables for which no valid (a, b) pair was found.
    Failure { unsatisfied: Vec<String> },
}

/// Splits each image v(x_i) as a*x_i + b, either from a caller-supplied
/// witness (name, a, b) or by dividing the terms of the normal form by x_i,
/// then verifies that a and b are first integrals. The no-witness split is a
/// heuristic; its failure lists the variables left unsatisfied and is not a
/// proof that no certificate exists.
pub fn kernel_linear_certify(
    v: &VectorField,
    witness: Option<&[(String, RingElement, RingElement)]>,
) -> Result<KernelLinearOutcome> {
    let ring = v.ring().clone();
    let mut pairs = Vec::with_capacity(ring.vars().len());
    let mut unsatisfied = Vec::new();
    for i in 0..ring.vars().len() {
        let img = &v.coeffs()[i];
        if img.is_zero() {
            pairs.push(None);
            continue;
        }
        let name = ring.vars().name(i);
        let given = witness.and_then(|w| {
            w.iter()
                .find(|(n, _, _)| n == name)
                .map(|(_, a, b)| (a.clone(), b.clone()))
        });
        let (a, b) = match given {
            Some(p) => p,
            None => {
                // split rep = a*x_i + b by divisibility of each term by x_i
                let xi = Monomial::var(ring.vars().len(), i, 1);
                let mut a = Polynomial::zero(ring.vars());
                let mut b = Polynomial::zero(ring.vars());
                for (m, c) in img.rep().terms() {
                    if xi.divides(m) {
                        a = &a + &Polynomial::term(
                            ring.vars(),
                            xi.quotient_into(m),
                            c.clone(),
                        );
                    } else {
                        b = &b + &Polynomial::term(ring.vars(), m.clone(), c.clone());
                    }
                }
                (RingElement::new(&ring, a), RingElement::new(&ring, b))
            }
        };
        require_same_ring(a.ring(), &ring)?;
        require_same_ring(b.ring(), &ring)?;
        let xi = RingElement::variable(&ring, i);
        let holds = img.sub(&a.mul(&xi).add(&b)).is_zero()
            && v.apply(&a)?.is_zero()
            && v.apply(&b)?.is_zero();
        if holds {
            pairs.push(Some((a, b)));
        } else {
            unsatisfied.push(name.to_string());
        }
    }
    if unsatisfied.is_empty() {
        Ok(KernelLinearOutcome::Certified(KernelLinearCertificate {
            pairs,
        }))
    } else {
        Ok(KernelLinearOutcome::Failure { unsatisfied })
    }
}

#[derive(Debug, Clone)]
pub enum IntegrabilityCertificate {
    Lnd(LndCertificate),
    KernelLinear(KernelLinearCertificate),
}

#[derive(Debug, Clone)]
pub enum FlowPart {
    Fixed,
    Linear { a: RingElement, b: RingElement },
}

/// Closed-form flow of a certified field. Immutable once built.
#[derive(Debug, Clone)]
pub enum FlowExpression {
    /// Terminating series of a nilpotent field: one polynomial image per
    /// ambient variable over the ambient variables extended by the time
    /// variable (always the last slot of `tvars`).
    Poly {
        ring: Ring,
        tvars: VarSet,
        images: Vec<Polynomial>,
    },
    /// Per-variable exp-unit solution.
    KernelLinear { ring: Ring, parts: Vec<FlowPart> },
}

impl FlowExpression {
    pub fn ring(&self) -> &Ring {
        match self {
            FlowExpression::Poly { ring, .. } => ring,
            FlowExpression::KernelLinear { ring, .. } => ring,
        }
    }

    pub fn is_polynomial(&self) -> bool {
        matches!(self, FlowExpression::Poly { .. })
    }
}

fn fresh_name(vars: &VarSet, base: &str) -> String {
    let mut name = base.to_string();
    while vars.index(&name).is_some() {
        name.push('_');
    }
    name
}

/// Builds the flow from a certificate, re-verifying the certificate against
/// the field first.
pub fn flow(v: &VectorField, cert: &IntegrabilityCertificate) -> Result<FlowExpression> {
    let ring = v.ring().clone();
    match cert {
        IntegrabilityCertificate::Lnd(c) => {
            if !c.verify(v)? {
                return Err(Error::MissingCertificate(
                    "nilpotency certificate does not match the field".into(),
                ));
            }
            let tname = fresh_name(ring.vars(), "t");
            let tvars = ring.vars().extended(&[tname.as_str()])?;
            let t_idx = tvars.len() - 1;
            let mut images = Vec::with_capacity(ring.vars().len());
            for i in 0..ring.vars().len() {
                let mut image = Polynomial::zero(&tvars);
                let mut iter = RingElement::variable(&ring, i);
                let mut factorial = Rational::one();
                let mut j: u32 = 0;
                loop {
                    if j > 0 {
                        factorial = factorial * Rational::from_integer(j.into());
                    }
                    let tpow = Polynomial::term(
                        &tvars,
                        Monomial::var(tvars.len(), t_idx, j),
                        factorial.recip(),
                    );
                    image = &image + &(&iter.rep().map_to(&tvars) * &tpow);
                    if j as i64 >= c.degrees[i] {
                        break;
                    }
                    iter = v.apply(&iter)?;
                    j += 1;
                }
                images.push(image);
            }
            Ok(FlowExpression::Poly {
                ring,
                tvars,
                images,
            })
        }
        IntegrabilityCertificate::KernelLinear(c) => {
            if !c.verify(v)? {
                return Err(Error::MissingCertificate(
                    "kernel-linear certificate does not match the field".into(),
                ));
            }
            let parts = c
                .pairs
                .iter()
                .map(|p| match p {
                    None => FlowPart::Fixed,
                    Some((a, b)) => FlowPart::Linear {
                        a: a.clone(),
                        b: b.clone(),
                    },
                })
                .collect();
            Ok(FlowExpression::KernelLinear { ring, parts })
        }
    }
}

impl fmt::Display for FlowExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowExpression::Poly { ring, images, .. } => {
                let lines: Vec<String> = images
                    .iter()
                    .enumerate()
                    .map(|(i, im)| format!("{} -> {}", ring.vars().name(i), im))
                    .collect();
                write!(f, "{}", lines.join(", "))
            }
            FlowExpression::KernelLinear { ring, parts } => {
                let lines: Vec<String> = parts
                    .iter()
                    .enumerate()
                    .map(|(i, part)| {
                        let v = ring.vars().name(i);
                        match part {
                            FlowPart::Fixed => format!("{v} -> {v}"),
                            FlowPart::Linear { a, b } if a.is_zero() => {
                                format!("{v} -> {v} + ({})*t", b.rep())
                            }
                            FlowPart::Linear { a, b } if b.is_zero() => {
                                format!("{v} -> exp(({})*t)*{v}", a.rep())
                            }
                            FlowPart::Linear { a, b } => format!(
                                "{v} -> exp(({a})*t)*{v} + ({b})*(exp(({a})*t) - 1)/({a})",
                                v = v,
                                a = a.rep(),
                                b = b.rep()
                            ),
                        }
                    })
                    .collect();
                write!(f, "{}", lines.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowImage {
    pub coords: Vec<Rational>,
    /// No rounded exp-unit entered any coordinate.
    pub exact: bool,
    /// max |relation| at the image, computed in exact rational arithmetic.
    pub residual: Rational,
}

/// Flows raw coordinates; they need not satisfy the relations (the residual
/// reports how far the image is off the variety either way).
pub fn flow_evaluate_coords(
    f: &FlowExpression,
    t: &Rational,
    coords: &[Rational],
    bits: u32,
) -> Result<FlowImage> {
    let ring = f.ring().clone();
    if coords.len() != ring.vars().len() {
        return Err(Error::Invalid(format!(
            "expected {} coordinates, got {}",
            ring.vars().len(),
            coords.len()
        )));
    }
    let mut exact = true;
    let out: Vec<Rational> = match f {
        FlowExpression::Poly { images, .. } => {
            let mut ext = coords.to_vec();
            ext.push(t.clone());
            images.iter().map(|im| im.eval(&ext)).collect()
        }
        FlowExpression::KernelLinear { parts, .. } => parts
            .iter()
            .enumerate()
            .map(|(i, part)| match part {
                FlowPart::Fixed => coords[i].clone(),
                FlowPart::Linear { a, b } => {
                    let av = a.rep().eval(coords);
                    let bv = b.rep().eval(coords);
                    let drift = &av * &coords[i] + &bv;
                    if t.is_zero() || drift.is_zero() {
                        // frozen coordinate, exactly
                        coords[i].clone()
                    } else if av.is_zero() {
                        &coords[i] + &(&bv * t)
                    } else {
                        exact = false;
                        let e = exp_rational(&(&av * t), bits);
                        let moved =
                            &(&e * &coords[i]) + &(&bv * &(&e - &Rational::one()) / &av);
                        round_dyadic(&moved, bits + 8)
                    }
                }
            })
            .collect(),
    };
    let mut residual = Rational::zero();
    for rel in ring.relations() {
        let r = rel.eval(&out).abs();
        if r > residual {
            residual = r;
        }
    }
    Ok(FlowImage {
        coords: out,
        exact,
        residual,
    })
}

pub fn flow_evaluate(f: &FlowExpression, t: &Rational, p: &Point, bits: u32) -> Result<FlowImage> {
    require_same_ring(f.ring(), p.ring())?;
    flow_evaluate_coords(f, t, p.coords(), bits)
}

/// Rebuilds a polynomial into a larger variable set by an explicit index map.
fn transplant(p: &Polynomial, target: &VarSet, index_map: &[usize]) -> Polynomial {
    let mut out = Polynomial::zero(target);
    for (m, c) in p.terms() {
        let mut exps = vec![0u32; target.len()];
        for (i, &e) in m.exps().iter().enumerate() {
            exps[index_map[i]] += e;
        }
        out = &out + &Polynomial::term(target, Monomial::from_exps(exps), c.clone());
    }
    out
}

fn poly_flow_data(f: &FlowExpression) -> Result<(&Ring, &VarSet, &[Polynomial])> {
    match f {
        FlowExpression::Poly {
            ring,
            tvars,
            images,
        } => Ok((ring, tvars, images)),
        FlowExpression::KernelLinear { .. } => Err(Error::MissingCertificate(
            "polynomial flow required".into(),
        )),
    }
}

/// Exact group law for polynomial flows: composing the time-t map with the
/// time-s map equals the time-(s+t) map modulo the relation ideal.
pub fn poly_flow_group_law_holds(f: &FlowExpression) -> Result<bool> {
    let (ring, tvars, images) = poly_flow_data(f)?;
    let n = ring.vars().len();
    let sname = fresh_name(tvars, "s");
    let bvars = tvars.extended(&[sname.as_str()])?;
    let t_idx = n;
    let s_idx = n + 1;
    let imgs_t: Vec<Polynomial> = images.iter().map(|p| p.map_to(&bvars)).collect();
    // same images with the time variable renamed to s
    let mut map_s: Vec<usize> = (0..n).collect();
    map_s.push(s_idx);
    let imgs_s: Vec<Polynomial> = images
        .iter()
        .map(|p| transplant(p, &bvars, &map_s))
        .collect();
    // composed = time-s map after time-t map
    let mut subs: Vec<Polynomial> = imgs_t.clone();
    subs.push(Polynomial::variable(&bvars, t_idx));
    subs.push(Polynomial::variable(&bvars, s_idx));
    let composed: Vec<Polynomial> = imgs_s.iter().map(|p| p.subst(&subs)).collect();
    // target = single map at time t+s
    let mut subs_sum: Vec<Polynomial> = (0..n).map(|j| Polynomial::variable(&bvars, j)).collect();
    subs_sum.push(&Polynomial::variable(&bvars, t_idx) + &Polynomial::variable(&bvars, s_idx));
    subs_sum.push(Polynomial::variable(&bvars, s_idx));
    let target: Vec<Polynomial> = imgs_t.iter().map(|p| p.subst(&subs_sum)).collect();
    let basis_b: Vec<Polynomial> = ring.basis().iter().map(|g| g.map_to(&bvars)).collect();
    Ok(composed
        .iter()
        .zip(&target)
        .all(|(c, g)| reduce_full(&(c - g), &basis_b).0.is_zero()))
}

/// Exact inverse law for polynomial flows: the time-(-t) map after the
/// time-t map is the identity modulo the relation ideal.
pub fn poly_flow_inverse_law_holds(f: &FlowExpression) -> Result<bool> {
    let (ring, tvars, images) = poly_flow_data(f)?;
    let n = ring.vars().len();
    let t_idx = n;
    let mut neg_t: Vec<Polynomial> = (0..n).map(|j| Polynomial::variable(tvars, j)).collect();
    neg_t.push(Polynomial::variable(tvars, t_idx).scale(&-Rational::one()));
    let imgs_neg: Vec<Polynomial> = images.iter().map(|p| p.subst(&neg_t)).collect();
    let mut subs: Vec<Polynomial> = images.to_vec();
    subs.push(Polynomial::variable(tvars, t_idx));
    let basis_t: Vec<Polynomial> = ring.basis().iter().map(|g| g.map_to(tvars)).collect();
    Ok((0..n).all(|i| {
        let composed = imgs_neg[i].subst(&subs);
        let diff = &composed - &Polynomial::variable(tvars, i);
        reduce_full(&diff, &basis_t).0.is_zero()
    }))
}

/// Specializes a polynomial flow at a rational time; the inverse images come
/// from the flow at -t.
pub fn poly_automorphism_at(f: &FlowExpression, t: &Rational) -> Result<PolyAutomorphism> {
    let (ring, _, images) = poly_flow_data(f)?;
    let n = ring.vars().len();
    let at = |time: &Rational| -> Vec<Polynomial> {
        let mut subs: Vec<Polynomial> = (0..n).map(|j| Polynomial::variable(ring.vars(), j)).collect();
        subs.push(Polynomial::constant(ring.vars(), time.clone()));
        images.iter().map(|p| p.subst(&subs)).collect()
    };
    PolyAutomorphism::new(ring, at(t), at(&-t.clone()))
}

/// Polynomial self-map with a declared inverse; verification is separate.
#[derive(Debug, Clone)]
pub struct PolyAutomorphism {
    ring: Ring,
    images: Vec<Polynomial>,
    inverse_images: Vec<Polynomial>,
}

impl PolyAutomorphism {
    pub fn new(ring: &Ring, images: Vec<Polynomial>, inverse_images: Vec<Polynomial>) -> Result<Self> {
        let n = ring.vars().len();
        if images.len() != n || inverse_images.len() != n {
            return Err(Error::Invalid(format!(
                "automorphism on {} needs {} images per direction",
                ring, n
            )));
        }
        for p in images.iter().chain(&inverse_images) {
            crate::vars::require_same_vars(p.vars(), ring.vars())?;
        }
        Ok(PolyAutomorphism {
            ring: ring.clone(),
            images,
            inverse_images,
        })
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn images(&self) -> &[Polynomial] {
        &self.images
    }

    pub fn inverse_images(&self) -> &[Polynomial] {
        &self.inverse_images
    }

    pub fn apply_coords(&self, coords: &[Rational]) -> Vec<Rational> {
        self.images.iter().map(|p| p.eval(coords)).collect()
    }

    pub fn apply_point(&self, p: &Point) -> Result<Point> {
        require_same_ring(&self.ring, p.ring())?;
        Point::new(&self.ring, self.apply_coords(p.coords()))
    }
}

impl fmt::Display for PolyAutomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self
            .images
            .iter()
            .enumerate()
            .map(|(i, im)| format!("{} -> {}", self.ring.vars().name(i), im))
            .collect();
        write!(f, "{}", lines.join(", "))
    }
}

#[derive(Debug, Clone)]
pub struct AutReport {
    pub relations_preserved: bool,
    /// First relation whose image fails to lie in the ideal.
    pub relation_witness: Option<String>,
    pub inverse_ok: bool,
    /// First variable where a composition misses the identity.
    pub inverse_witness: Option<String>,
    /// None when no chart was supplied.
    pub volume_ok: Option<bool>,
    /// Jacobian determinant times u(image)/u; "1" when volume is preserved.
    pub volume_factor: Option<String>,
}

impl AutReport {
    pub fn all_ok(&self) -> bool {
        self.relations_preserved && self.inverse_ok && self.volume_ok != Some(false)
    }
}

fn rf_det(m: &[Vec<RationalFunction>], vars: &VarSet) -> RationalFunction {
    let n = m.len();
    match n {
        0 => RationalFunction::one(vars),
        1 => m[0][0].clone(),
        _ => {
            let mut acc = RationalFunction::zero(vars);
            for k in 0..n {
                if m[0][k].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<RationalFunction>> = (1..n)
                    .map(|i| {
                        (0..n)
                            .filter(|&j| j != k)
                            .map(|j| m[i][j].clone())
                            .collect()
                    })
                    .collect();
                let cof = &m[0][k] * &rf_det(&minor, vars);
                if k % 2 == 0 {
                    acc = &acc + &cof;
                } else {
                    acc = &acc - &cof;
                }
            }
            acc
        }
    }
}

/// Checks that the relations map into the ideal, that the declared inverse
/// works from both sides, and (with a chart) that the chart self-map has
/// Jacobian determinant times u(image)/u identically 1, all exactly.
pub fn verify_automorphism(phi: &PolyAutomorphism, chart: Option<&ChartRef>) -> Result<AutReport> {
    let ring = phi.ring().clone();
    let mut relations_preserved = true;
    let mut relation_witness = None;
    for rel in ring.relations() {
        if !ring.ideal_member(&rel.subst(phi.images())) {
            relations_preserved = false;
            relation_witness = Some(rel.to_string());
            break;
        }
    }
    let mut inverse_ok = true;
    let mut inverse_witness = None;
    'outer: for (fwd, bwd) in [
        (phi.images(), phi.inverse_images()),
        (phi.inverse_images(), phi.images()),
    ] {
        for i in 0..ring.vars().len() {
            let composed = bwd[i].subst(fwd);
            let diff = &composed - &Polynomial::variable(ring.vars(), i);
            if !ring.ideal_member(&diff) {
                inverse_ok = false;
                inverse_witness = Some(ring.vars().name(i).to_string());
                break 'outer;
            }
        }
    }
    let mut volume_ok = None;
    let mut volume_factor = None;
    if let Some(c) = chart {
        require_same_ring(c.ring(), &ring)?;
        let m: Vec<RationalFunction> = c
            .chart_indices()
            .iter()
            .map(|&i| c.to_chart(&phi.images()[i]))
            .collect();
        let d = c.dim();
        let jac: Vec<Vec<RationalFunction>> = (0..d)
            .map(|k| (0..d).map(|j| m[k].partial(j)).collect())
            .collect();
        let det = rf_det(&jac, c.chart_vars());
        let u_img = c.unit().subst_rf(&m)?;
        let factor = (&det * &u_img).div(c.unit())?;
        volume_ok = Some(factor == RationalFunction::one(c.chart_vars()));
        volume_factor = Some(factor.to_string());
    }
    Ok(AutReport {
        relations_preserved,
        relation_witness,
        inverse_ok,
        inverse_witness,
        volume_ok,
        volume_factor,
    })
}

fn rational_gcd(a: &Rational, b: &Rational) -> Rational {
    use num::Integer;
    let num = a.numer().gcd(b.numer());
    let den = a.denom().lcm(b.denom());
    Rational::new(num, den)
}

/// Exact point on the orbit of a kernel-linear flow. When every per-variable
/// rate a_v(p) is an integer multiple k_v of a common rational c, the time-t
/// image is rational in lambda = exp(c t): each moving coordinate becomes
/// lambda^(k_v) v + b_v (lambda^(k_v) - 1)/a_v. Any rational lambda > 0 then
/// yields an exact rational point on the real orbit. Returns None when a
/// coordinate needs the linear-in-t branch with nonzero drift (its time would
/// be log(lambda)/c, irrational), or when lambda <= 0.
pub fn kernel_linear_lambda_orbit(
    f: &FlowExpression,
    coords: &[Rational],
    lambda: &Rational,
) -> Result<Option<Vec<Rational>>> {
    let FlowExpression::KernelLinear { ring, parts } = f else {
        return Err(Error::MissingCertificate(
            "kernel-linear flow required".into(),
        ));
    };
    if coords.len() != ring.vars().len() {
        return Err(Error::Invalid(format!(
            "expected {} coordinates, got {}",
            ring.vars().len(),
            coords.len()
        )));
    }
    if !lambda.is_positive() {
        return Ok(None);
    }
    if lambda.is_one() {
        return Ok(Some(coords.to_vec()));
    }
    // rates and drifts at the point
    let vals: Vec<Option<(Rational, Rational)>> = parts
        .iter()
        .map(|part| match part {
            FlowPart::Fixed => None,
            FlowPart::Linear { a, b } => {
                Some((a.rep().eval(coords), b.rep().eval(coords)))
            }
        })
        .collect();
    let mut c: Option<Rational> = None;
    for v in vals.iter().flatten() {
        if !v.0.is_zero() {
            c = Some(match c {
                None => v.0.clone(),
                Some(g) => rational_gcd(&g, &v.0),
            });
        }
    }
    let out: Option<Vec<Rational>> = vals
        .iter()
        .enumerate()
        .map(|(i, v)| match v {
            None => Some(coords[i].clone()),
            Some((av, bv)) => {
                let drift = av * &coords[i] + bv;
                if drift.is_zero() {
                    Some(coords[i].clone())
                } else if av.is_zero() {
                    // would move by b*t with t irrational
                    None
                } else {
                    let k = (av / c.as_ref().expect("nonzero rate seen")).to_integer();
                    let lk = crate::numeric::rat_pow_i(
                        lambda,
                        i64::try_from(k).expect("small multiple"),
                    );
                    Some(&lk * &coords[i] + &(bv * &(&lk - &Rational::one()) / av))
                }
            }
        })
        .collect();
    Ok(out)
}

/// Numeric volume check for flows with exp-units: central-difference Jacobian
/// of the chart self-map at each sample point, determinant times u(image)/u,
/// returning the largest |value - 1|. Step 2^-32 keeps the O(h^2) truncation
/// term far below 1e-9 even for steep flows; the default 256 working bits
/// leave the h^-1 rounding amplification negligible.
pub fn flow_volume_check(
    f: &FlowExpression,
    t: &Rational,
    chart: &ChartRef,
    chart_points: &[Vec<Rational>],
    bits: u32,
) -> Result<Rational> {
    require_same_ring(f.ring(), chart.ring())?;
    let d = chart.dim();
    let h = Rational::new(1.into(), num::BigInt::from(1u64 << 32));
    let map = |u: &[Rational]| -> Result<Vec<Rational>> {
        let amb = chart.lift(u)?;
        let img = flow_evaluate_coords(f, t, &amb, bits)?;
        Ok(chart
            .chart_indices()
            .iter()
            .map(|&i| img.coords[i].clone())
            .collect())
    };
    let mut worst = Rational::zero();
    for u in chart_points {
        if u.len() != d {
            return Err(Error::Invalid(format!(
                "chart point needs {} coordinates, got {}",
                d,
                u.len()
            )));
        }
        let center = map(u)?;
        let mut jac = QMatrix::zeros(d, d);
        for j in 0..d {
            let mut up = u.to_vec();
            let mut dn = u.to_vec();
            up[j] = &up[j] + &h;
            dn[j] = &dn[j] - &h;
            let fp = map(&up)?;
            let fm = map(&dn)?;
            for k in 0..d {
                jac.set(k, j, (&fp[k] - &fm[k]) / (&h + &h));
            }
        }
        let ratio = chart.unit().eval(&center)? / chart.unit().eval(u)?;
        let val = jac.det() * ratio - Rational::one();
        if val.abs() > worst {
            worst = val.abs();
        }
    }
    Ok(worst)
}
