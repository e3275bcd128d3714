//! End-to-end acceptance gate. Eight independent criteria, one printed
//! pass/fail line each; the test fails only after every line is printed.
//!
//! Run `cargo test --test acceptance -- --nocapture` to see the lines.

use std::path::{Path, PathBuf};

use num::{One, Signed, Zero};

use avf_core::density::{
    build_transitivity_plan, check_separation, closure_member, closure_span, compatibility_check,
    perturb_to_separated, semi_compatibility_evidence, Membership, SecondCertificate,
};
use avf_core::derivation::{bracket, kernel_member, span_at_point, tangency_check, Tangency, VectorField};
use avf_core::families::{
    affine_space, s_lines, s_nu1, s_printed_third_field_coeffs, s_sigma2, s_sigma3, s_torus_chart,
    s_type1_field, s_type2_field, sl2_delta1, sl2_delta2, sl2_ring, surface_s, verify_line,
};
use avf_core::files::{any_flow, load_dir};
use avf_core::flow::{
    flow, flow_evaluate_coords, flow_volume_check, lnd_certify, lnd_degree, poly_automorphism_at,
    poly_flow_group_law_holds, poly_flow_inverse_law_holds, verify_automorphism, Bounded,
    IntegrabilityCertificate,
};
use avf_core::monomial::{monomials_upto, Monomial};
use avf_core::numeric::parse_rational;
use avf_core::parse::{parse_expression, parse_polynomial};
use avf_core::sample::{random_polynomial_in, random_s_point, rng, small_rational};
use avf_core::variety::unit_ideal_certificate;
use avf_core::volume::{divergence, restrict_to_chart, ChartField, VolumeChart};
use avf_core::{varset, Point, Polynomial, Rational, RationalFunction, Result, Ring, RingElement};

const PRECISION: u32 = 256;
const LND_BOUND: u32 = 64;

fn q(s: &str) -> Rational {
    parse_rational(s).expect("literal rational")
}

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn elem(ring: &Ring, src: &str) -> Result<RingElement> {
    Ok(RingElement::new(ring, parse_polynomial(ring.vars(), src)?))
}

fn axis_field(ring: &Ring, axis: usize, coeff: Polynomial) -> VectorField {
    let mut coeffs = vec![Polynomial::zero(ring.vars()); ring.vars().len()];
    coeffs[axis] = coeff;
    VectorField::new(ring, coeffs)
}

/// Bracket difference identity on affine 3-space:
/// [f1 d1, x1 f2 d2] - [x1 f1 d1, f2 d2] = f1 f2 d2
/// for 50 seeded pairs with f1 free of x1 and f2 free of x2, degree <= 4.
fn bracket_identity() -> Result<bool> {
    let ring = affine_space("A3", &["x1", "x2", "x3"])?;
    let vs = ring.vars().clone();
    let x1 = Polynomial::variable(&vs, 0);
    let mut r = rng(0xC1);
    for trial in 0..50 {
        let f1 = random_polynomial_in(&mut r, &vs, &[1, 2], 4, 4);
        let f2 = random_polynomial_in(&mut r, &vs, &[0, 2], 4, 4);
        let lhs = bracket(
            &axis_field(&ring, 0, f1.clone()),
            &axis_field(&ring, 1, &x1 * &f2),
        )?
        .sub(&bracket(
            &axis_field(&ring, 0, &x1 * &f1),
            &axis_field(&ring, 1, f2.clone()),
        )?)?;
        let rhs = axis_field(&ring, 1, &f1 * &f2);
        if lhs != rhs {
            eprintln!("  bracket identity broke at trial {trial}");
            return Ok(false);
        }
    }
    Ok(true)
}

/// SL2 pair: kernels, nilpotency certificates, degree of a1*b2, bounded
/// semi-compatibility with witness 1, and the degree-one compatibility mode.
fn sl2_pair() -> Result<bool> {
    let ring = sl2_ring();
    let d1 = sl2_delta1(&ring)?;
    let d2 = sl2_delta2(&ring)?;

    let mut ok = true;
    for name in ["a1", "a2"] {
        ok &= kernel_member(&d1, &elem(&ring, name)?)?;
    }
    for name in ["b1", "b2"] {
        ok &= kernel_member(&d2, &elem(&ring, name)?)?;
    }

    let Bounded::Within(c1) = lnd_certify(&d1, LND_BOUND)? else {
        return Ok(false);
    };
    let Bounded::Within(c2) = lnd_certify(&d2, LND_BOUND)? else {
        return Ok(false);
    };

    let a1b2 = elem(&ring, "a1*b2")?;
    ok &= lnd_degree(&d1, &a1b2, LND_BOUND)? == Bounded::Within(1);
    ok &= lnd_degree(&d2, &a1b2, LND_BOUND)? == Bounded::Within(1);

    // kernel monomials of degree <= 3 on each side
    let side = |lo: usize| -> Result<Vec<RingElement>> {
        monomials_upto(2, 3)
            .into_iter()
            .map(|m| {
                let mut exps = vec![0u32; 4];
                exps[lo] = m.exp(0);
                exps[lo + 1] = m.exp(1);
                Ok(RingElement::new(
                    &ring,
                    Polynomial::term(ring.vars(), Monomial::from_exps(exps), Rational::one()),
                ))
            })
            .collect()
    };
    let report = semi_compatibility_evidence(
        &d1,
        &d2,
        &side(0)?,
        &side(2)?,
        &RingElement::one(&ring),
        3,
    )?;
    ok &= report.succeeded();

    let compat = compatibility_check(&d1, &c1, &d2, &SecondCertificate::Lnd(c2), &a1b2)?;
    ok &= compat.holds && compat.mode == "LND+LND" && compat.condition_degree_one;
    Ok(ok)
}

/// Chart divergences on the surface: the restricted field, its first summand,
/// both field families scaled by first integrals, and the nonzero scaled case.
fn surface_divergences() -> Result<bool> {
    let ring = surface_s();
    let chart = s_torus_chart(&ring)?;
    let cv = varset(&["x", "y"])?;
    let nu1 = s_nu1(&ring)?;

    let restricted = restrict_to_chart(&nu1, &chart)?;
    let expect_x = parse_expression(&cv, "(1-x)/y")?;
    let expect_y = parse_expression(&cv, "-(1-y)/x")?;
    let mut ok = restricted.coeffs() == [expect_x.clone(), expect_y];

    let first = ChartField::new(&chart, vec![expect_x, RationalFunction::zero(&cv)]);
    ok &= divergence(&first) == parse_expression(&cv, "-1/(x*y)")?;
    ok &= divergence(&restricted).is_zero();

    let mut r = rng(0xC3);
    let vs = ring.vars().clone();
    let div_zero = |v: &VectorField| -> Result<bool> {
        Ok(divergence(&restrict_to_chart(v, &chart)?).is_zero())
    };
    for _ in 0..3 {
        let qz = random_polynomial_in(&mut r, &vs, &[2], 3, 3);
        ok &= div_zero(&s_type1_field(&ring, &qz)?)?;
    }
    // weight-invariant multipliers: polynomials in the first integral of each
    // family member
    for (k, l, integral) in [
        (1u32, 0u32, "x"),
        (0, 1, "y"),
        (1, 1, "x*y"),
        (2, 1, "x^2*y"),
    ] {
        let u = parse_polynomial(&vs, integral)?;
        let mut ptilde = Polynomial::zero(&vs);
        for j in 0..=3u32 {
            ptilde = &ptilde + &u.pow(j).scale(&small_rational(&mut r));
        }
        ok &= div_zero(&s_type2_field(&ring, k, l, &ptilde)?)?;
    }

    let scaled = nu1.scale_by(&elem(&ring, "x")?);
    let d = divergence(&restrict_to_chart(&scaled, &chart)?);
    ok &= !d.is_zero() && d == parse_expression(&cv, "(1-x)/y")?;
    Ok(ok)
}

/// Tangency of the three corrected fields, the frozen residual of the printed
/// variant, spanning at 25 random points, and the degree-2 unit certificate
/// for the minors of the coefficient matrix.
fn tangency_span_unit_certificate() -> Result<bool> {
    let ring = surface_s();
    let fields = [s_nu1(&ring)?, s_sigma2(&ring)?, s_sigma3(&ring)?];
    let mut ok = fields
        .iter()
        .all(|f| matches!(tangency_check(f), Tangency::Tangent { .. }));

    let printed = VectorField::new(&ring, s_printed_third_field_coeffs(&ring));
    match tangency_check(&printed) {
        Tangency::NotTangent { residuals } => {
            ok &= residuals == vec![parse_polynomial(ring.vars(), "x^2 - y^2 - x + y")?];
        }
        Tangency::Tangent { .. } => return Ok(false),
    }

    let mut r = rng(0xC4);
    for _ in 0..25 {
        let p = random_s_point(&mut r, &ring);
        ok &= span_at_point(&fields, &p)?.spans;
    }

    // all 2x2 minors of the 3x3 coefficient matrix, then the relation
    let m: Vec<Vec<Polynomial>> = fields
        .iter()
        .map(|f| f.coeffs().iter().map(|c| c.rep().clone()).collect())
        .collect();
    let mut gens = Vec::new();
    for r1 in 0..3 {
        for r2 in (r1 + 1)..3 {
            for c1 in 0..3 {
                for c2 in (c1 + 1)..3 {
                    gens.push(&(&m[r1][c1] * &m[r2][c2]) - &(&m[r1][c2] * &m[r2][c1]));
                }
            }
        }
    }
    gens.push(ring.relations()[0].clone());
    match unit_ideal_certificate(&gens, 8)? {
        Some(cert) => Ok(ok && cert.degree == 2 && cert.verify(&gens)),
        None => Ok(false),
    }
}

/// The five parametrized lines lie on the surface and satisfy their defining
/// functions identically.
fn five_lines() -> Result<bool> {
    let ring = surface_s();
    let lines = s_lines(&ring)?;
    if lines.len() != 5 {
        return Ok(false);
    }
    for line in &lines {
        if !verify_line(&ring, &line)?.passes() {
            eprintln!("  line {} failed", line.name);
            return Ok(false);
        }
    }
    Ok(true)
}

/// Flow laws: exact group and inverse laws for a polynomial shear, the
/// numeric group law for the kernel-linear flow at 20 seeded triples, and the
/// volume check for every divergence-free corpus field with a certified flow.
fn flow_laws_and_volume() -> Result<bool> {
    let a3 = affine_space("A3", &["x1", "x2", "x3"])?;
    let shear = VectorField::new(
        &a3,
        vec![
            Polynomial::variable(a3.vars(), 1),
            Polynomial::variable(a3.vars(), 2),
            Polynomial::zero(a3.vars()),
        ],
    );
    let Bounded::Within(cert) = lnd_certify(&shear, LND_BOUND)? else {
        return Ok(false);
    };
    let shear_flow = flow(&shear, &IntegrabilityCertificate::Lnd(cert))?;
    let mut ok =
        poly_flow_group_law_holds(&shear_flow)? && poly_flow_inverse_law_holds(&shear_flow)?;

    let ring = surface_s();
    let nu1 = s_nu1(&ring)?;
    let Some(kl) = any_flow(&nu1, LND_BOUND)? else {
        return Ok(false);
    };
    let tol = q("1e-9");
    let mut r = rng(0xC6);
    for _ in 0..20 {
        let s = small_rational(&mut r);
        let t = small_rational(&mut r);
        let p = random_s_point(&mut r, &ring);
        let at_s = flow_evaluate_coords(&kl, &s, p.coords(), PRECISION)?;
        let then_t = flow_evaluate_coords(&kl, &t, &at_s.coords, PRECISION)?;
        let at_st = flow_evaluate_coords(&kl, &(&s + &t), p.coords(), PRECISION)?;
        let gap = then_t
            .coords
            .iter()
            .zip(&at_st.coords)
            .map(|(a, b)| (a - b).abs())
            .max()
            .expect("three coordinates");
        ok &= gap <= tol;
    }

    // every divergence-free corpus field with a certified flow passes the
    // volume check for its ring's form
    let (env, _) = load_dir(&corpus_dir())?;
    let a3_ring = env
        .varieties
        .get("A3")
        .ok_or_else(|| avf_core::Error::Invalid("corpus lacks A3".into()))?;
    let a3_chart = VolumeChart::new(
        a3_ring,
        &["x1", "x2", "x3"],
        &[],
        RationalFunction::one(&varset(&["x1", "x2", "x3"])?),
        None,
    )?;
    let torus_points: Vec<Vec<Rational>> = env
        .point_sets
        .get("s-torus-points")
        .ok_or_else(|| avf_core::Error::Invalid("corpus lacks s-torus-points".into()))?
        .iter()
        .map(|p| p.coords()[..2].to_vec())
        .collect();
    let mut flows_checked = 0;
    for (name, v) in &env.fields {
        if !matches!(tangency_check(v), Tangency::Tangent { .. }) {
            continue;
        }
        let chart = match v.ring().name() {
            "S" => env.forms.get("s-torus").cloned(),
            "A2" => env.forms.get("a2-standard").cloned(),
            "A3" => Some(a3_chart.clone()),
            _ => None,
        };
        let Some(chart) = chart else { continue };
        let Ok(cf) = restrict_to_chart(v, &chart) else {
            continue;
        };
        if !divergence(&cf).is_zero() {
            continue;
        }
        let Some(fexpr) = any_flow(v, LND_BOUND)? else {
            continue;
        };
        flows_checked += 1;
        if fexpr.is_polynomial() {
            let phi = poly_automorphism_at(&fexpr, &q("1"))?;
            let report = verify_automorphism(&phi, Some(&chart))?;
            if report.volume_ok != Some(true) {
                eprintln!("  volume factor not 1 for polynomial flow of {name}");
                ok = false;
            }
        } else {
            let worst = flow_volume_check(&fexpr, &q("1/3"), &chart, &torus_points, PRECISION)?;
            if worst > tol {
                eprintln!("  volume distortion {worst} for flow of {name}");
                ok = false;
            }
        }
    }
    Ok(ok && flows_checked >= 10)
}

/// Closure semantics: every low-degree field along the second plane axis is a
/// certified member, and on the surface the bounded closure stays divergence
/// free and refuses the scaled generator with a divergence obstruction.
fn closure_semantics() -> Result<bool> {
    let a2 = affine_space("A2", &["x1", "x2"])?;
    let vs = a2.vars().clone();
    let mut gens = Vec::new();
    for j in 0..=3u32 {
        gens.push(axis_field(&a2, 0, parse_polynomial(&vs, &format!("x2^{j}"))?));
        if j <= 2 {
            gens.push(axis_field(
                &a2,
                0,
                parse_polynomial(&vs, &format!("x1*x2^{j}"))?,
            ));
        }
        gens.push(axis_field(&a2, 1, parse_polynomial(&vs, &format!("x1^{j}"))?));
        if j <= 2 {
            gens.push(axis_field(
                &a2,
                1,
                parse_polynomial(&vs, &format!("x2*x1^{j}"))?,
            ));
        }
    }
    let basis = closure_span(&gens, 3, 2)?;
    let mut ok = true;
    for m in monomials_upto(2, 3) {
        let h = Polynomial::term(&vs, m, Rational::one());
        let target = axis_field(&a2, 1, h.clone());
        if !closure_member(&basis, &target, None)?.is_member() {
            eprintln!("  {h}*d/dx2 missing from the plane closure");
            ok = false;
        }
    }

    let ring = surface_s();
    let chart = s_torus_chart(&ring)?;
    let one = Polynomial::one(ring.vars());
    let surface_gens = vec![
        s_type1_field(&ring, &one)?,
        s_type1_field(&ring, &parse_polynomial(ring.vars(), "z")?)?,
        s_type2_field(&ring, 0, 1, &one)?,
        s_type2_field(&ring, 0, 1, &parse_polynomial(ring.vars(), "y")?)?,
        s_type2_field(&ring, 1, 0, &one)?,
        s_type2_field(&ring, 1, 0, &parse_polynomial(ring.vars(), "x")?)?,
        s_type2_field(&ring, 1, 1, &one)?,
    ];
    let surface_basis = closure_span(&surface_gens, 3, 3)?;
    for entry in surface_basis.entries() {
        if !divergence(&restrict_to_chart(&entry.field, &chart)?).is_zero() {
            eprintln!("  depth-{} closure entry has nonzero divergence", entry.depth);
            ok = false;
        }
    }
    let x_nu1 = s_nu1(&ring)?.scale_by(&elem(&ring, "x")?);
    match closure_member(&surface_basis, &x_nu1, Some(&chart))? {
        Membership::NotInSpan { obstruction } => ok &= obstruction.is_some(),
        _ => ok = false,
    }
    Ok(ok)
}

/// Transitivity: separation holds exactly, the plan pins the two fixed points,
/// reaches the target within tolerance from a distance of at least 1e-2, keeps
/// every image on the surface to 1e-12, and a constructed collision is
/// resolved by an exact perturbation.
fn transitivity() -> Result<bool> {
    let ring = surface_s();
    let pairs = vec![
        (s_nu1(&ring)?, elem(&ring, "z")?),
        (s_sigma2(&ring)?, elem(&ring, "y")?),
        (s_sigma3(&ring)?, elem(&ring, "x")?),
    ];
    let points = vec![
        Point::new(&ring, vec![q("1/2"), q("1/4"), q("2")])?,
        Point::new(&ring, vec![q("1"), q("1"), q("-1")])?,
        Point::new(&ring, vec![q("3"), q("1/3"), q("-7/3")])?,
    ];
    check_separation(&pairs, &points)?;

    let target = vec![q("3/4"), q("1/10"), q("2")];
    let displacement = points[0]
        .coords()
        .iter()
        .zip(&target)
        .map(|(a, b)| (a - b).abs())
        .max()
        .expect("three coordinates");
    let mut ok = displacement >= q("1/100");

    let tol = q("1e-9");
    let plan = build_transitivity_plan(&pairs, &points, &target, &tol, PRECISION, 100)?;
    ok &= plan.target_error <= tol;
    ok &= plan.max_residual <= q("1e-12");
    for stage in &plan.stages {
        for fixed in &plan.fixed {
            if !stage.field.value_at(fixed).iter().all(Rational::is_zero) {
                eprintln!("  stage field does not vanish at a fixed point");
                ok = false;
            }
        }
    }
    for fixed in &plan.fixed {
        let (image, residual) = plan.apply(fixed.coords(), PRECISION)?;
        ok &= image == fixed.coords() && residual.is_zero();
    }

    let colliding = vec![
        Point::new(&ring, vec![q("1"), q("1"), q("-1")])?,
        Point::new(&ring, vec![q("1/2"), q("1/4"), q("2")])?,
        Point::new(&ring, vec![q("1/4"), q("1/2"), q("2")])?,
    ];
    let (separated, record) = perturb_to_separated(&pairs, &colliding)?;
    ok &= record.is_some() && check_separation(&pairs, &separated).is_ok();
    Ok(ok)
}

#[test]
fn acceptance_gate() {
    let criteria: [(&str, fn() -> Result<bool>); 8] = [
        ("bracket difference identity, 50 seeded pairs", bracket_identity),
        ("SL2 kernels, certificates, semi- and full compatibility", sl2_pair),
        ("chart divergences of the surface field families", surface_divergences),
        ("tangency, misprint residual, span, unit certificate", tangency_span_unit_certificate),
        ("five parametrized lines with defining functions", five_lines),
        ("flow group/inverse laws and volume checks", flow_laws_and_volume),
        ("bounded Lie-closure membership and refusal", closure_semantics),
        ("exact transitivity plan and collision perturbation", transitivity),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (passed, note) = match run() {
            Ok(v) => (v, String::new()),
            Err(e) => (false, format!(" ({e})")),
        };
        println!(
            "criterion {}: {} - {}{}",
            i + 1,
            if passed { "PASS" } else { "FAIL" },
            name,
            note
        );
        all &= passed;
    }
    assert!(all, "at least one acceptance criterion failed");
}
