//! Density toolkit: compatible pairs, bounded Lie-closure spans, and the
//! constructive transitivity procedure.
//!
//! Everything that claims success here is exact: spans and memberships are
//! rational linear algebra over a fixed monomial index, fixed points of
//! transitivity stages vanish identically, and separation is decided by
//! rational equality. The two deliberate approximations are clearly scoped:
//! closure results are bounded by coefficient degree and bracket depth (a
//! negative is "not found within bounds" unless a divergence obstruction
//! upgrades it), and stage times are fitted numerically while exactness is
//! reserved for the frozen points, which need no numerics at all.

use crate::derivation::{bracket, kernel_member, tangency_check, VectorField};
use crate::error::{Error, Result};
use crate::flow::{
    flow, flow_evaluate_coords, kernel_linear_certify, kernel_linear_lambda_orbit, lnd_certify,
    lnd_degree, Bounded, FlowExpression, IntegrabilityCertificate, KernelLinearOutcome,
    LndCertificate, DEFAULT_LND_BOUND,
};
use crate::linalg::{QMatrix, RowSpace};
use crate::monomial::Monomial;
use crate::numeric::{decimal_string, round_dyadic};
use crate::poly::Polynomial;
use crate::variety::{require_same_ring, Point, Ring, RingElement};
use crate::volume::{divergence, restrict_to_chart, ChartRef};
use crate::Rational;
use num::{One, Signed, Zero};
use std::collections::BTreeMap;

pub const BOUNDED_EVIDENCE_NOTE: &str =
    "bounded evidence: success at this degree bound is not a proof for all degrees";

/// Span evidence for the kernel-product condition: every normal-form monomial
/// of degree <= the bound, scaled by the ideal witness, is expressed in the
/// span of pairwise products of the two kernel lists.
#[derive(Debug, Clone)]
pub struct SemiCompatReport {
    pub degree_bound: u32,
    pub products: usize,
    pub monomials_total: usize,
    pub monomials_expressed: usize,
    pub failed_monomials: Vec<String>,
    pub note: &'static str,
}

impl SemiCompatReport {
    pub fn succeeded(&self) -> bool {
        self.failed_monomials.is_empty()
    }
}

fn scalar_vector(
    p: &Polynomial,
    index: &BTreeMap<Monomial, usize>,
    ncols: usize,
) -> Option<Vec<Rational>> {
    let mut v = vec![Rational::zero(); ncols];
    for (m, c) in p.terms() {
        v[*index.get(m)?] = c.clone();
    }
    Some(v)
}

pub fn semi_compatibility_evidence(
    sigma: &VectorField,
    delta: &VectorField,
    ker_sigma: &[RingElement],
    ker_delta: &[RingElement],
    ideal_witness: &RingElement,
    degree_bound: u32,
) -> Result<SemiCompatReport> {
    let ring = sigma.ring().clone();
    require_same_ring(delta.ring(), &ring)?;
    require_same_ring(ideal_witness.ring(), &ring)?;
    if ideal_witness.is_zero() {
        return Err(Error::Invalid("ideal witness must be nonzero".into()));
    }
    for (v, list, side) in [(sigma, ker_sigma, "first"), (delta, ker_delta, "second")] {
        for k in list {
            if !kernel_member(v, k)? {
                return Err(Error::Invalid(format!(
                    "listed element {} is not in the kernel of the {} field",
                    k, side
                )));
            }
        }
    }
    let products: Vec<RingElement> = ker_sigma
        .iter()
        .flat_map(|a| ker_delta.iter().map(move |b| a.mul(b)))
        .collect();
    let targets: Vec<(String, RingElement)> = ring
        .standard_monomials(degree_bound)
        .into_iter()
        .map(|m| {
            let p = Polynomial::term(ring.vars(), m.clone(), Rational::one());
            let name = p.to_string();
            (name, ideal_witness.mul(&RingElement::new(&ring, p)))
        })
        .collect();
    let mut support: std::collections::BTreeSet<Monomial> = std::collections::BTreeSet::new();
    for e in products.iter().chain(targets.iter().map(|(_, t)| t)) {
        support.extend(e.rep().terms().map(|(m, _)| m.clone()));
    }
    let index: BTreeMap<Monomial, usize> = support
        .into_iter()
        .enumerate()
        .map(|(i, m)| (m, i))
        .collect();
    let ncols = index.len().max(1);
    let mut space = RowSpace::new(ncols);
    for p in &products {
        space.insert(&scalar_vector(p.rep(), &index, ncols).expect("support indexed"));
    }
    let mut failed = Vec::new();
    let total = targets.len();
    for (name, t) in targets {
        let v = scalar_vector(t.rep(), &index, ncols).expect("support indexed");
        let (residual, _) = space.reduce(&v);
        if residual.iter().any(|c| !c.is_zero()) {
            failed.push(name);
        }
    }
    Ok(SemiCompatReport {
        degree_bound,
        products: products.len(),
        monomials_total: total,
        monomials_expressed: total - failed.len(),
        failed_monomials: failed,
        note: BOUNDED_EVIDENCE_NOTE,
    })
}

/// Certificate for the second member of a pair: nilpotent, or diagonal on
/// the generators (the semisimple case handled here).
#[derive(Debug, Clone)]
pub enum SecondCertificate {
    Lnd(LndCertificate),
    DiagonalSemisimple(Vec<Rational>),
}

/// Checks that each coefficient is a constant multiple of its own variable.
pub fn diagonal_semisimple_certify(v: &VectorField) -> Option<Vec<Rational>> {
    let ring = v.ring();
    let mut eigen = Vec::with_capacity(ring.vars().len());
    for (i, c) in v.coeffs().iter().enumerate() {
        if c.is_zero() {
            eigen.push(Rational::zero());
            continue;
        }
        let terms: Vec<_> = c.rep().terms().collect();
        let [(m, lam)] = terms[..] else { return None };
        if *m != Monomial::var(ring.vars().len(), i, 1) {
            return None;
        }
        eigen.push(lam.clone());
    }
    Some(eigen)
}

#[derive(Debug, Clone)]
pub struct CompatReport {
    pub mode: &'static str,
    /// a lies in Ker delta and sigma(a) is a nonzero kernel element of sigma.
    pub condition_kernel_shift: bool,
    pub sigma_degree: Option<i64>,
    /// Nilpotency degree of a under delta; None in semisimple mode.
    pub delta_degree: Option<i64>,
    /// Semisimple mode: whether delta kills a.
    pub delta_kernel_flag: Option<bool>,
    /// Both nilpotency degrees equal 1 (resp. degree 1 and kernel membership).
    pub condition_degree_one: bool,
    pub holds: bool,
}

/// Verifies the compatible-pair conditions for a witness element a: either
/// the kernel-shift condition or the degree-one condition must hold.
pub fn compatibility_check(
    sigma: &VectorField,
    sigma_cert: &LndCertificate,
    delta: &VectorField,
    delta_cert: &SecondCertificate,
    a: &RingElement,
) -> Result<CompatReport> {
    let ring = sigma.ring().clone();
    require_same_ring(delta.ring(), &ring)?;
    require_same_ring(a.ring(), &ring)?;
    if !sigma_cert.verify(sigma)? {
        return Err(Error::MissingCertificate(
            "first field is not certified nilpotent".into(),
        ));
    }
    let mode = match delta_cert {
        SecondCertificate::Lnd(c) => {
            if !c.verify(delta)? {
                return Err(Error::MissingCertificate(
                    "second field is not certified nilpotent".into(),
                ));
            }
            "LND+LND"
        }
        SecondCertificate::DiagonalSemisimple(eigen) => {
            if diagonal_semisimple_certify(delta).as_ref() != Some(eigen) {
                return Err(Error::MissingCertificate(
                    "second field is not diagonal on the generators".into(),
                ));
            }
            "LND+semisimple"
        }
    };
    let sa = sigma.apply(a)?;
    let condition_kernel_shift =
        kernel_member(delta, a)? && !sa.is_zero() && kernel_member(sigma, &sa)?;
    let sigma_degree = lnd_degree(sigma, a, sigma_cert.bound_used)?.within();
    let (delta_degree, delta_kernel_flag, condition_degree_one) = match delta_cert {
        SecondCertificate::Lnd(c) => {
            let dd = lnd_degree(delta, a, c.bound_used)?.within();
            let cond = sigma_degree == Some(1) && dd == Some(1);
            (dd, None, cond)
        }
        SecondCertificate::DiagonalSemisimple(_) => {
            let flag = kernel_member(delta, a)?;
            (None, Some(flag), sigma_degree == Some(1) && flag)
        }
    };
    Ok(CompatReport {
        mode,
        condition_kernel_shift,
        sigma_degree,
        delta_degree,
        delta_kernel_flag,
        condition_degree_one,
        holds: condition_kernel_shift || condition_degree_one,
    })
}

#[derive(Debug, Clone)]
pub struct ClosureEntry {
    pub field: VectorField,
    /// 0 for generators, else 1 + max depth of the bracketed operands.
    pub depth: u32,
}

/// Linearly independent basis of the bracket closure, bounded by coefficient
/// degree and bracket depth. Coefficient vectors live over the standard
/// monomials of the ring up to the degree bound, one block per coordinate.
#[derive(Debug)]
pub struct ClosureBasis {
    ring: Ring,
    degree_bound: u32,
    depth_bound: u32,
    index: BTreeMap<Monomial, usize>,
    block: usize,
    entries: Vec<ClosureEntry>,
    space: RowSpace,
    pub discarded_over_degree: usize,
    pub brackets_computed: usize,
}

impl ClosureBasis {
    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn degree_bound(&self) -> u32 {
        self.degree_bound
    }

    pub fn depth_bound(&self) -> u32 {
        self.depth_bound
    }

    pub fn entries(&self) -> &[ClosureEntry] {
        &self.entries
    }

    pub fn rank(&self) -> usize {
        self.entries.len()
    }

    /// None when a coefficient exceeds the degree bound.
    fn vector_of(&self, f: &VectorField) -> Option<Vec<Rational>> {
        let mut v = vec![Rational::zero(); self.block * self.ring.vars().len()];
        for (c, coeff) in f.coeffs().iter().enumerate() {
            for (m, q) in coeff.rep().terms() {
                v[c * self.block + self.index.get(m)?] = q.clone();
            }
        }
        Some(v)
    }
}

/// Brackets all pairs up to the depth bound, keeping an exact linearly
/// independent basis and discarding fields whose coefficients exceed the
/// degree bound. Deterministic: generators in input order, then bracket
/// pairs in basis order.
pub fn closure_span(
    generators: &[VectorField],
    degree_bound: u32,
    depth_bound: u32,
) -> Result<ClosureBasis> {
    let Some(first) = generators.first() else {
        return Err(Error::Invalid("at least one generator required".into()));
    };
    let ring = first.ring().clone();
    for g in generators {
        require_same_ring(g.ring(), &ring)?;
        if !tangency_check(g).is_tangent() {
            return Err(Error::Invalid(format!(
                "generator {g} does not preserve the relation ideal"
            )));
        }
    }
    let index: BTreeMap<Monomial, usize> = ring
        .standard_monomials(degree_bound)
        .into_iter()
        .enumerate()
        .map(|(i, m)| (m, i))
        .collect();
    let block = index.len();
    let mut basis = ClosureBasis {
        ring: ring.clone(),
        degree_bound,
        depth_bound,
        index,
        block,
        entries: Vec::new(),
        space: RowSpace::new((block * ring.vars().len()).max(1)),
        discarded_over_degree: 0,
        brackets_computed: 0,
    };
    let push = |basis: &mut ClosureBasis, f: VectorField, depth: u32| -> Result<bool> {
        if f.is_zero() {
            return Ok(false);
        }
        let Some(v) = basis.vector_of(&f) else {
            if depth == 0 {
                return Err(Error::Invalid(format!(
                    "generator {f} exceeds the coefficient degree bound {}",
                    basis.degree_bound
                )));
            }
            basis.discarded_over_degree += 1;
            return Ok(false);
        };
        let (residual, _) = basis.space.reduce(&v);
        if residual.iter().all(|c| c.is_zero()) {
            return Ok(false);
        }
        basis.space.insert(&v);
        basis.entries.push(ClosureEntry { field: f, depth });
        Ok(true)
    };
    for g in generators {
        push(&mut basis, g.clone(), 0)?;
    }
    for depth in 1..=depth_bound {
        let len = basis.entries.len();
        let mut grew = false;
        for i in 0..len {
            for j in (i + 1)..len {
                let (di, dj) = (basis.entries[i].depth, basis.entries[j].depth);
                if di.max(dj) != depth - 1 {
                    continue;
                }
                let br = bracket(&basis.entries[i].field, &basis.entries[j].field)?;
                basis.brackets_computed += 1;
                grew |= push(&mut basis, br, depth)?;
            }
        }
        if !grew {
            break;
        }
    }
    Ok(basis)
}

#[derive(Debug, Clone)]
pub enum Membership {
    /// Exact coordinates over the basis entries, re-verified by expansion.
    Member { coordinates: Vec<Rational> },
    /// Outside the bounded span. With an obstruction message, genuinely
    /// outside the full closure regardless of bounds.
    NotInSpan { obstruction: Option<String> },
    /// The target cannot even be indexed under the bound.
    DegreeExceedsBound { degree: u32, bound: u32 },
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member { .. })
    }
}

/// Exact membership of a field in the bounded closure span. When a chart is
/// supplied and the whole basis is divergence-free while the target is not,
/// the refusal is recorded as a genuine divergence obstruction.
pub fn closure_member(
    basis: &ClosureBasis,
    target: &VectorField,
    chart: Option<&ChartRef>,
) -> Result<Membership> {
    require_same_ring(target.ring(), basis.ring())?;
    let Some(v) = basis.vector_of(target) else {
        return Ok(Membership::DegreeExceedsBound {
            degree: target.coeff_degree().unwrap_or(0),
            bound: basis.degree_bound,
        });
    };
    let (residual, combo) = basis.space.reduce(&v);
    if residual.iter().all(|c| c.is_zero()) {
        let mut recon = VectorField::zero(basis.ring());
        for (c, e) in combo.iter().zip(basis.entries()) {
            recon = recon.add(&e.field.scale(c))?;
        }
        if &recon != target {
            return Err(Error::Invalid(
                "membership coordinates failed re-verification".into(),
            ));
        }
        return Ok(Membership::Member { coordinates: combo });
    }
    let mut obstruction = None;
    if let Some(c) = chart {
        let target_div = divergence(&restrict_to_chart(target, c)?);
        if !target_div.is_zero() {
            let mut all_free = true;
            for e in basis.entries() {
                if !divergence(&restrict_to_chart(&e.field, c)?).is_zero() {
                    all_free = false;
                    break;
                }
            }
            if all_free {
                obstruction = Some(format!(
                    "divergence {} is nonzero while the closure basis is \
                     divergence-free, so no extension of the bounds can \
                     contain this field",
                    target_div
                ));
            }
        }
    }
    Ok(Membership::NotInSpan { obstruction })
}

/// One stage of a transitivity plan: the base field scaled by an
/// interpolation polynomial in its first integral, flowed for a fitted time.
#[derive(Debug, Clone)]
pub struct Stage {
    pub base: VectorField,
    pub integral: RingElement,
    pub multiplier: RingElement,
    pub field: VectorField,
    pub flow: FlowExpression,
    pub time: Rational,
}

#[derive(Debug)]
pub struct TransitivityPlan {
    pub stages: Vec<Stage>,
    pub moving: Point,
    pub fixed: Vec<Point>,
    pub target: Vec<Rational>,
    pub achieved: Vec<Rational>,
    /// Sup-norm distance from the achieved image to the target.
    pub target_error: Rational,
    /// Largest surface residual seen at any evaluated image.
    pub max_residual: Rational,
    pub iterations: usize,
}

impl TransitivityPlan {
    /// Runs the composed stage flows on raw coordinates; returns the image
    /// and the worst relation residual along the way.
    pub fn apply(&self, coords: &[Rational], bits: u32) -> Result<(Vec<Rational>, Rational)> {
        let times: Vec<Rational> = self.stages.iter().map(|s| s.time.clone()).collect();
        run_stages(&self.stages, &times, coords, bits)
    }
}

/// Pairwise distinctness of every integral across the points.
pub fn check_separation(
    pairs: &[(VectorField, RingElement)],
    points: &[Point],
) -> Result<()> {
    match first_collision(pairs, points) {
        None => Ok(()),
        Some((j, i, l)) => Err(Error::SeparationViolated {
            integral: pairs[j].1.to_string(),
            i,
            l,
            value: pairs[j].1.eval(&points[i]).to_string(),
        }),
    }
}

fn first_collision(
    pairs: &[(VectorField, RingElement)],
    points: &[Point],
) -> Option<(usize, usize, usize)> {
    for (j, (_, f)) in pairs.iter().enumerate() {
        let vals: Vec<Rational> = points.iter().map(|p| f.eval(p)).collect();
        for i in 0..points.len() {
            for l in (i + 1)..points.len() {
                if vals[i] == vals[l] {
                    return Some((j, i, l));
                }
            }
        }
    }
    None
}

/// Interpolation multiplier in the integral: 1 at points[hot], 0 at every
/// other point. Denominators are nonzero by separation of the integral.
fn lagrange_multiplier(
    integral: &RingElement,
    values: &[Rational],
    hot: usize,
) -> RingElement {
    let ring = integral.ring().clone();
    let mut g = RingElement::one(&ring);
    for (o, v) in values.iter().enumerate() {
        if o == hot {
            continue;
        }
        let shifted = integral.sub(&RingElement::new(
            &ring,
            Polynomial::constant(ring.vars(), v.clone()),
        ));
        g = g.mul(&shifted.scale(&(&values[hot] - v).recip()));
    }
    g
}

/// Flow certificate for a stage field g*sigma. Tries the kernel-linear
/// certificate inherited from sigma (pairs scaled by g), then the division
/// heuristic, then a bounded nilpotency search.
fn certify_stage_flow(
    stage: &VectorField,
    base: &VectorField,
    multiplier: &RingElement,
) -> Result<FlowExpression> {
    if let KernelLinearOutcome::Certified(base_cert) = kernel_linear_certify(base, None)? {
        let witness: Vec<(String, RingElement, RingElement)> = base_cert
            .pairs
            .iter()
            .enumerate()
            .filter_map(|(i, p)| {
                p.as_ref().map(|(a, b)| {
                    (
                        base.ring().vars().name(i).to_string(),
                        multiplier.mul(a),
                        multiplier.mul(b),
                    )
                })
            })
            .collect();
        if let KernelLinearOutcome::Certified(c) = kernel_linear_certify(stage, Some(&witness))? {
            return flow(stage, &IntegrabilityCertificate::KernelLinear(c));
        }
    }
    if let KernelLinearOutcome::Certified(c) = kernel_linear_certify(stage, None)? {
        return flow(stage, &IntegrabilityCertificate::KernelLinear(c));
    }
    if let Bounded::Within(c) = lnd_certify(stage, DEFAULT_LND_BOUND)? {
        return flow(stage, &IntegrabilityCertificate::Lnd(c));
    }
    Err(Error::MissingCertificate(format!(
        "no flow certificate for stage field {stage}"
    )))
}

fn run_stages(
    stages: &[Stage],
    times: &[Rational],
    start: &[Rational],
    bits: u32,
) -> Result<(Vec<Rational>, Rational)> {
    let mut coords = start.to_vec();
    let mut worst = Rational::zero();
    for (st, t) in stages.iter().zip(times) {
        let img = flow_evaluate_coords(&st.flow, t, &coords, bits)?;
        if img.residual > worst {
            worst = img.residual.clone();
        }
        coords = img.coords;
    }
    Ok((coords, worst))
}

fn sup_norm(v: &[Rational]) -> Rational {
    v.iter()
        .map(Signed::abs)
        .fold(Rational::zero(), |m, x| if x > m { x } else { m })
}

fn diff(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Builds the stage data (separation, interpolation multipliers, exact fixed
/// points, flow certificates) and fits the stage times by damped
/// least-squares Newton so the composed flow carries points[0] to the target.
/// All points after the first are fixed exactly by construction.
pub fn build_transitivity_plan(
    pairs: &[(VectorField, RingElement)],
    points: &[Point],
    target: &[Rational],
    tol: &Rational,
    bits: u32,
    max_iter: usize,
) -> Result<TransitivityPlan> {
    let Some(((first, _), moving)) = pairs.first().zip(points.first()) else {
        return Err(Error::Invalid(
            "need at least one stage pair and one point".into(),
        ));
    };
    let ring = first.ring().clone();
    for (v, f) in pairs {
        require_same_ring(v.ring(), &ring)?;
        require_same_ring(f.ring(), &ring)?;
    }
    for p in points {
        require_same_ring(p.ring(), &ring)?;
    }
    let n = ring.vars().len();
    if target.len() != n {
        return Err(Error::Invalid(format!(
            "target needs {} coordinates, got {}",
            n,
            target.len()
        )));
    }
    check_separation(pairs, points)?;
    let mut stages = Vec::with_capacity(pairs.len());
    for (sigma, integral) in pairs {
        if !kernel_member(sigma, integral)? {
            return Err(Error::Invalid(format!(
                "{integral} is not a first integral of its stage field"
            )));
        }
        let values: Vec<Rational> = points.iter().map(|p| integral.eval(p)).collect();
        let multiplier = lagrange_multiplier(integral, &values, 0);
        let field = sigma.scale_by(&multiplier);
        for (i, p) in points.iter().enumerate().skip(1) {
            if field.value_at(p).iter().any(|c| !c.is_zero()) {
                return Err(Error::Invalid(format!(
                    "stage field fails to vanish at fixed point {i}"
                )));
            }
        }
        let fl = certify_stage_flow(&field, sigma, &multiplier)?;
        stages.push(Stage {
            base: sigma.clone(),
            integral: integral.clone(),
            multiplier,
            field,
            flow: fl,
            time: Rational::zero(),
        });
    }

    let k = stages.len();
    let start = moving.coords().to_vec();
    let mut times = vec![Rational::zero(); k];
    let mut worst_residual = Rational::zero();
    let h = Rational::new(1.into(), num::BigInt::from(1u64 << 20));
    let ridge = Rational::new(1.into(), num::BigInt::from(1u128 << 40));
    let (mut current, r0) = run_stages(&stages, &times, &start, bits)?;
    worst_residual = worst_residual.max(r0);
    let mut err_vec = diff(&current, target);
    let mut err = sup_norm(&err_vec);
    let mut iterations = 0usize;
    while err > *tol {
        if iterations >= max_iter {
            return Err(Error::NoConvergence {
                iterations,
                residual: decimal_string(&err, 15),
            });
        }
        iterations += 1;
        let mut jac = QMatrix::zeros(n, k);
        for j in 0..k {
            let mut tp = times.clone();
            let mut tm = times.clone();
            tp[j] = &tp[j] + &h;
            tm[j] = &tm[j] - &h;
            let (cp, rp) = run_stages(&stages, &tp, &start, bits)?;
            let (cm, rm) = run_stages(&stages, &tm, &start, bits)?;
            worst_residual = worst_residual.max(rp).max(rm);
            for i in 0..n {
                jac.set(i, j, (&cp[i] - &cm[i]) / (&h + &h));
            }
        }
        let jt = jac.transpose();
        let mut normal = jt.mul(&jac);
        for d in 0..k {
            let v = normal.get(d, d) + &ridge;
            normal.set(d, d, v);
        }
        let grad = jt.mul_vec(&err_vec);
        let Some(delta) = normal.solve(&grad) else {
            return Err(Error::NoConvergence {
                iterations,
                residual: decimal_string(&err, 15),
            });
        };
        let mut scale = Rational::one();
        let mut improved = false;
        for _ in 0..40 {
            let cand: Vec<Rational> = times
                .iter()
                .zip(&delta)
                .map(|(t, d)| round_dyadic(&(t - &(&scale * d)), bits))
                .collect();
            let (cc, rc) = run_stages(&stages, &cand, &start, bits)?;
            worst_residual = worst_residual.max(rc);
            let ev = diff(&cc, target);
            let e = sup_norm(&ev);
            if e < err {
                times = cand;
                current = cc;
                err_vec = ev;
                err = e;
                improved = true;
                break;
            }
            scale = &scale / &Rational::from_integer(2.into());
        }
        if !improved {
            return Err(Error::NoConvergence {
                iterations,
                residual: decimal_string(&err, 15),
            });
        }
    }
    for (s, t) in stages.iter_mut().zip(&times) {
        s.time = t.clone();
    }
    Ok(TransitivityPlan {
        stages,
        moving: moving.clone(),
        fixed: points[1..].to_vec(),
        target: target.to_vec(),
        achieved: current,
        target_error: err,
        max_residual: worst_residual,
        iterations,
    })
}

/// Record of the stage flow used to separate colliding points.
#[derive(Debug, Clone)]
pub struct PerturbRecord {
    /// Index into the supplied pairs of the field that did the moving.
    pub pair_index: usize,
    pub moved_point: usize,
    /// Exp-unit value (kernel-linear) or flow time (polynomial) used.
    pub parameter: Rational,
    pub multiplier: RingElement,
    pub flow: FlowExpression,
}

const LAMBDA_CANDIDATES: [(i64, i64); 8] = [
    (9, 8),
    (8, 9),
    (5, 4),
    (4, 5),
    (17, 16),
    (16, 17),
    (3, 2),
    (2, 3),
];

const TIME_CANDIDATES: [(i64, i64); 8] = [
    (1, 8),
    (-1, 8),
    (1, 4),
    (-1, 4),
    (1, 16),
    (-1, 16),
    (1, 2),
    (-1, 2),
];

fn all_distinct(points: &[Point]) -> bool {
    for i in 0..points.len() {
        for l in (i + 1)..points.len() {
            if points[i] == points[l] {
                return false;
            }
        }
    }
    true
}

/// Restores the separation condition by flowing one colliding point with a
/// stage field that freezes every other point, using an exactly rational
/// orbit parameter so the adjusted point satisfies the relations exactly.
pub fn perturb_to_separated(
    pairs: &[(VectorField, RingElement)],
    points: &[Point],
) -> Result<(Vec<Point>, Option<PerturbRecord>)> {
    if points.len() <= 1 {
        return Ok((points.to_vec(), None));
    }
    let ring = points[0].ring().clone();
    for (v, f) in pairs {
        require_same_ring(v.ring(), &ring)?;
        require_same_ring(f.ring(), &ring)?;
    }
    let Some((j, ci, cl)) = first_collision(pairs, points) else {
        return Ok((points.to_vec(), None));
    };
    let colliding_integral = &pairs[j].1;
    for hot in [ci, cl] {
        for (k, (sigma, f_k)) in pairs.iter().enumerate() {
            // the chosen field must actually move the colliding value
            if sigma
                .apply(colliding_integral)?
                .eval(&points[hot])
                .is_zero()
            {
                continue;
            }
            if !kernel_member(sigma, f_k)? {
                continue;
            }
            // its own integral must isolate the hot point from all others
            let vals: Vec<Rational> = points.iter().map(|p| f_k.eval(p)).collect();
            if (0..points.len()).any(|o| o != hot && vals[o] == vals[hot]) {
                continue;
            }
            let multiplier = lagrange_multiplier(f_k, &vals, hot);
            let stage = sigma.scale_by(&multiplier);
            let Ok(fl) = certify_stage_flow(&stage, sigma, &multiplier) else {
                continue;
            };
            let candidates: Vec<Rational> = match &fl {
                FlowExpression::KernelLinear { .. } => LAMBDA_CANDIDATES
                    .iter()
                    .map(|&(a, b)| Rational::new(a.into(), b.into()))
                    .collect(),
                FlowExpression::Poly { .. } => TIME_CANDIDATES
                    .iter()
                    .map(|&(a, b)| Rational::new(a.into(), b.into()))
                    .collect(),
            };
            for param in candidates {
                let moved = match &fl {
                    FlowExpression::KernelLinear { .. } => {
                        kernel_linear_lambda_orbit(&fl, points[hot].coords(), &param)?
                    }
                    FlowExpression::Poly { .. } => {
                        // polynomial flow at rational time is exact
                        Some(flow_evaluate_coords(&fl, &param, points[hot].coords(), 64)?.coords)
                    }
                };
                let Some(coords) = moved else {
                    continue;
                };
                let Ok(new_point) = Point::new(&ring, coords) else {
                    continue;
                };
                let mut adjusted = points.to_vec();
                adjusted[hot] = new_point;
                if all_distinct(&adjusted) && first_collision(pairs, &adjusted).is_none() {
                    return Ok((
                        adjusted,
                        Some(PerturbRecord {
                            pair_index: k,
                            moved_point: hot,
                            parameter: param,
                            multiplier,
                            flow: fl,
                        }),
                    ));
                }
            }
        }
    }
    Err(Error::CannotSeparate(format!(
        "no supplied field moves {} at the colliding points while freezing the rest",
        colliding_integral
    )))
}
