//! JSON document model and the corpus runner.
//!
//! A corpus directory holds one JSON document per file. Definition documents
//! (variety, field, point, point-set, form) register named objects; check
//! documents describe a verification to run against them together with the
//! expected outcome. The runner resolves names, executes each check, and
//! compares the verdict (and any expected witness) with the expectation.
//!
//! Checks are independent of each other, so they can run in any order or in
//! parallel; reports are sorted by id to keep output reproducible.

use crate::density::{
    build_transitivity_plan, check_separation, closure_member, closure_span, compatibility_check,
    diagonal_semisimple_certify, perturb_to_separated, semi_compatibility_evidence, Membership,
    SecondCertificate,
};
use crate::derivation::{bracket, kernel_member, span_at_point, tangency_check, VectorField};
use crate::derivation::Tangency as TangencyOutcome;
use crate::error::{Error, Result};
use crate::families::verify_line;
use crate::flow::{
    flow, flow_evaluate_coords, flow_volume_check, kernel_linear_certify,
    kernel_linear_lambda_orbit, lnd_certify, lnd_degree, poly_automorphism_at,
    poly_flow_group_law_holds, poly_flow_inverse_law_holds, verify_automorphism, Bounded,
    FlowExpression, IntegrabilityCertificate, KernelLinearOutcome, DEFAULT_LND_BOUND,
};
use crate::numeric::{decimal_string, parse_rational};
use crate::parse::{parse_expression, parse_polynomial};
use crate::variety::{unit_ideal_certificate, CoordinateRing, Point, Ring, RingElement};
use crate::vars::varset;
use crate::volume::{divergence, restrict_to_chart, ChartRef, VolumeChart};
use crate::Rational;
use num::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Document {
    Variety(VarietyDoc),
    Field(FieldDoc),
    Point(PointDoc),
    PointSet(PointSetDoc),
    Form(FormDoc),
    Check(CheckDoc),
}

#[derive(Debug, Deserialize)]
pub struct VarietyDoc {
    pub name: String,
    pub vars: Vec<String>,
    #[serde(default)]
    pub relations: Vec<String>,
}

#[derive(Debug, Deserialize)]
pub struct FieldDoc {
    pub name: String,
    pub variety: String,
    /// Coefficient per variable name; missing variables get 0.
    pub coeffs: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
pub struct PointDoc {
    pub name: String,
    pub variety: String,
    pub coords: Vec<String>,
}

#[derive(Debug, Deserialize)]
pub struct PointSetDoc {
    pub name: String,
    pub variety: String,
    pub points: Vec<Vec<String>>,
}

#[derive(Debug, Deserialize)]
pub struct FormDoc {
    pub name: String,
    pub variety: String,
    pub chart_vars: Vec<String>,
    /// Expression in the chart variables for each substituted variable.
    pub substitutions: BTreeMap<String, String>,
    pub unit: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Deserialize)]
pub struct CheckDoc {
    pub id: String,
    pub expect: Expectation,
    #[serde(flatten)]
    pub spec: CheckSpec,
}

#[derive(Debug, Deserialize)]
pub struct FlowLawSample {
    pub s: String,
    pub t: String,
    pub point: String,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case")]
pub enum CheckSpec {
    /// Field preserves the relation ideal; on failure the per-relation
    /// residual normal forms may be pinned as a witness.
    Tangency {
        field: String,
        #[serde(default)]
        witness: Option<Vec<String>>,
    },
    /// Element lies in the kernel of the field.
    FirstIntegral { field: String, element: String },
    /// Divergence of the field with respect to the form equals `value`.
    Divergence {
        field: String,
        form: String,
        value: String,
    },
    /// Lie bracket of two named fields equals the given coefficients.
    Bracket {
        left: String,
        right: String,
        result: BTreeMap<String, String>,
    },
    LndDegree {
        field: String,
        element: String,
        degree: i64,
        #[serde(default)]
        bound: Option<u32>,
    },
    LndCertify {
        field: String,
        degrees: Vec<i64>,
        #[serde(default)]
        bound: Option<u32>,
    },
    /// Kernel-linear certificate exists; on expected failure the listed
    /// variables must be exactly the unsatisfied ones.
    KernelLinear {
        field: String,
        #[serde(default)]
        unsatisfied: Vec<String>,
    },
    /// Image of a point under the flow, either at a rational time or at a
    /// rational exp-unit (`lambda`), compared with the stated coordinates.
    FlowImage {
        field: String,
        point: String,
        #[serde(default)]
        time: Option<String>,
        #[serde(default)]
        lambda: Option<String>,
        image: Vec<String>,
        #[serde(default)]
        exact: bool,
    },
    /// Group and inverse laws of the flow: exact for polynomial flows,
    /// sampled within tolerance for exp-unit flows.
    FlowLaws {
        field: String,
        #[serde(default)]
        samples: Vec<FlowLawSample>,
        #[serde(default)]
        tol: Option<String>,
    },
    /// Jacobian determinant of the time-t chart self-map stays within tol
    /// of 1 at every sample point.
    FlowVolume {
        field: String,
        form: String,
        points: String,
        time: String,
        tol: String,
    },
    /// Time-t map of a polynomial flow is a relation-preserving automorphism
    /// with exact inverse, and preserves the form when one is given.
    Automorphism {
        field: String,
        time: String,
        #[serde(default)]
        form: Option<String>,
    },
    /// Rank of the field values inside the tangent space at the point.
    Span {
        fields: Vec<String>,
        point: String,
        dimension: usize,
    },
    /// Cofactor certificate that the generators span the unit ideal, with
    /// the discovered cofactor degree optionally pinned.
    UnitCertificate {
        variety: String,
        generators: Vec<String>,
        max_degree: u32,
        #[serde(default)]
        degree: Option<u32>,
    },
    /// Kernel products express all low-degree normal forms times a witness.
    SemiCompat {
        sigma: String,
        delta: String,
        ker_sigma: Vec<String>,
        ker_delta: Vec<String>,
        witness: String,
        degree: u32,
    },
    /// Compatible-pair conditions for a witness element.
    Compat {
        sigma: String,
        delta: String,
        witness: String,
        #[serde(default)]
        mode: Option<String>,
    },
    /// Membership of the target in the bounded bracket closure of the
    /// generators; with `obstruction`, an expected refusal must carry a
    /// divergence obstruction.
    ClosureMember {
        generators: Vec<String>,
        target: String,
        max_degree: u32,
        depth: u32,
        #[serde(default)]
        form: Option<String>,
        #[serde(default)]
        obstruction: bool,
    },
    /// Full transitivity plan: separation, exact freezing, fitted times.
    Transitivity {
        pairs: Vec<(String, String)>,
        points: Vec<String>,
        target: Vec<String>,
        tol: String,
        #[serde(default)]
        max_iter: Option<usize>,
    },
    /// Pairwise distinctness of every stage integral across the points.
    Separation {
        pairs: Vec<(String, String)>,
        points: Vec<String>,
    },
    /// Collision repair by an exactly rational stage-flow orbit.
    Perturb {
        pairs: Vec<(String, String)>,
        points: Vec<String>,
    },
    /// Parametrized line lies on the variety and its defining function
    /// vanishes along it.
    Line {
        variety: String,
        name: String,
        param: Vec<String>,
        defining: String,
        #[serde(default)]
        witness: Option<Vec<String>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Pass => write!(f, "pass"),
            Verdict::Fail => write!(f, "fail"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub id: String,
    pub expect: Expectation,
    pub verdict: Verdict,
    /// Verdict category and any pinned witness both agree with the document.
    pub matched: bool,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct Environment {
    pub varieties: BTreeMap<String, Ring>,
    pub fields: BTreeMap<String, VectorField>,
    pub points: BTreeMap<String, Point>,
    pub point_sets: BTreeMap<String, Vec<Point>>,
    pub forms: BTreeMap<String, ChartRef>,
}

impl Environment {
    fn variety(&self, name: &str) -> Result<&Ring> {
        self.varieties
            .get(name)
            .ok_or_else(|| Error::Invalid(format!("unknown variety `{name}`")))
    }

    fn field(&self, name: &str) -> Result<&VectorField> {
        self.fields
            .get(name)
            .ok_or_else(|| Error::Invalid(format!("unknown field `{name}`")))
    }

    fn point(&self, name: &str) -> Result<&Point> {
        self.points
            .get(name)
            .ok_or_else(|| Error::Invalid(format!("unknown point `{name}`")))
    }

    fn point_set(&self, name: &str) -> Result<&[Point]> {
        self.point_sets
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Invalid(format!("unknown point set `{name}`")))
    }

    fn form(&self, name: &str) -> Result<&ChartRef> {
        self.forms
            .get(name)
            .ok_or_else(|| Error::Invalid(format!("unknown form `{name}`")))
    }

    /// Registers one definition document; checks are returned to the caller.
    pub fn register(&mut self, doc: Document) -> Result<Option<CheckDoc>> {
        match doc {
            Document::Variety(d) => {
                let vars = varset(&d.vars)?;
                let rels = d
                    .relations
                    .iter()
                    .map(|s| parse_polynomial(&vars, s))
                    .collect::<Result<Vec<_>>>()?;
                let ring = CoordinateRing::new(&d.name, &vars, rels)?;
                if self.varieties.insert(d.name.clone(), ring).is_some() {
                    return Err(Error::Invalid(format!("duplicate variety `{}`", d.name)));
                }
            }
            Document::Field(d) => {
                let ring = self.variety(&d.variety)?.clone();
                for key in d.coeffs.keys() {
                    if ring.vars().index(key).is_none() {
                        return Err(Error::Invalid(format!(
                            "field `{}` names unknown variable `{key}`",
                            d.name
                        )));
                    }
                }
                let coeffs = ring
                    .vars()
                    .names()
                    .iter()
                    .map(|v| match d.coeffs.get(v) {
                        Some(s) => parse_polynomial(ring.vars(), s),
                        None => Ok(crate::poly::Polynomial::zero(ring.vars())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let field = VectorField::new(&ring, coeffs);
                if self.fields.insert(d.name.clone(), field).is_some() {
                    return Err(Error::Invalid(format!("duplicate field `{}`", d.name)));
                }
            }
            Document::Point(d) => {
                let ring = self.variety(&d.variety)?.clone();
                let coords = parse_coords(&d.coords)?;
                let point = Point::new(&ring, coords)?;
                if self.points.insert(d.name.clone(), point).is_some() {
                    return Err(Error::Invalid(format!("duplicate point `{}`", d.name)));
                }
            }
            Document::PointSet(d) => {
                let ring = self.variety(&d.variety)?.clone();
                let pts = d
                    .points
                    .iter()
                    .map(|c| Point::new(&ring, parse_coords(c)?))
                    .collect::<Result<Vec<_>>>()?;
                if self.point_sets.insert(d.name.clone(), pts).is_some() {
                    return Err(Error::Invalid(format!("duplicate point set `{}`", d.name)));
                }
            }
            Document::Form(d) => {
                let ring = self.variety(&d.variety)?.clone();
                let chart_names: Vec<&str> = d.chart_vars.iter().map(String::as_str).collect();
                let chart_vars = varset(&chart_names)?;
                let subs = d
                    .substitutions
                    .iter()
                    .map(|(v, expr)| Ok((v.as_str(), parse_expression(&chart_vars, expr)?)))
                    .collect::<Result<Vec<_>>>()?;
                let unit = parse_expression(&chart_vars, &d.unit)?;
                let chart = VolumeChart::new(&ring, &chart_names, &subs, unit, None)?;
                if self.forms.insert(d.name.clone(), chart).is_some() {
                    return Err(Error::Invalid(format!("duplicate form `{}`", d.name)));
                }
            }
            Document::Check(c) => return Ok(Some(c)),
        }
        Ok(None)
    }
}

fn parse_coords(raw: &[String]) -> Result<Vec<Rational>> {
    raw.iter()
        .map(|s| {
            parse_rational(s).ok_or_else(|| Error::Invalid(format!("cannot parse rational `{s}`")))
        })
        .collect()
}

fn parse_tol(s: &str) -> Result<Rational> {
    match parse_rational(s) {
        Some(t) if t.is_positive() => Ok(t),
        _ => Err(Error::Invalid(format!("tolerance `{s}` must be positive"))),
    }
}

pub fn parse_document(src: &str) -> Result<Document> {
    Ok(serde_json::from_str(src)?)
}

/// Loads every .json file of the directory (sorted by file name), registers
/// definitions, and returns the environment plus all checks.
pub fn load_dir(dir: &Path) -> Result<(Environment, Vec<CheckDoc>)> {
    let mut names: Vec<_> = std::fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    names.sort();
    // definitions may reference each other only through varieties, so two
    // passes suffice: varieties first, then everything else in file order
    let mut varieties = Vec::new();
    let mut others = Vec::new();
    for path in names {
        let src = std::fs::read_to_string(&path)?;
        let doc = parse_document(&src)
            .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
        if matches!(doc, Document::Variety(_)) {
            varieties.push((path, doc));
        } else {
            others.push((path, doc));
        }
    }
    let mut env = Environment::default();
    let mut checks = Vec::new();
    for (path, doc) in varieties.into_iter().chain(others) {
        if let Some(c) = env
            .register(doc)
            .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?
        {
            checks.push(c);
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for c in &checks {
        if !seen.insert(c.id.clone()) {
            return Err(Error::Invalid(format!("duplicate check id `{}`", c.id)));
        }
    }
    Ok((env, checks))
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub bits: u32,
    pub default_tol: Rational,
    pub lnd_bound: u32,
    pub max_iter: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            bits: 256,
            default_tol: Rational::new(1.into(), 1_000_000_000.into()),
            lnd_bound: DEFAULT_LND_BOUND,
            max_iter: 100,
        }
    }
}

/// Preferred flow construction: exact polynomial flow when the field is
/// certified nilpotent, exp-unit flow when kernel-linear, else None.
/// Picks a certified closed-form flow for `f`: the polynomial LND flow when
/// nilpotency certifies within `bound`, else the kernel-linear flow, else None.
pub fn any_flow(f: &VectorField, bound: u32) -> Result<Option<FlowExpression>> {
    if let Bounded::Within(c) = lnd_certify(f, bound)? {
        return Ok(Some(flow(f, &IntegrabilityCertificate::Lnd(c))?));
    }
    if let KernelLinearOutcome::Certified(c) = kernel_linear_certify(f, None)? {
        return Ok(Some(flow(f, &IntegrabilityCertificate::KernelLinear(c))?));
    }
    Ok(None)
}

fn sup_dist(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(Rational::zero(), |m, v| if v > m { v } else { m })
}

struct Evaluation {
    verdict: Verdict,
    detail: String,
    witness_ok: bool,
}

impl Evaluation {
    fn new(verdict: Verdict, detail: impl Into<String>) -> Self {
        Evaluation {
            verdict,
            detail: detail.into(),
            witness_ok: true,
        }
    }

    fn witness(mut self, ok: bool) -> Self {
        self.witness_ok = ok;
        self
    }
}

fn evaluate(env: &Environment, spec: &CheckSpec, cfg: &RunConfig) -> Result<Evaluation> {
    use CheckSpec::*;
    Ok(match spec {
        Tangency { field, witness } => {
            let f = env.field(field)?;
            match tangency_check(f) {
                TangencyOutcome::Tangent { .. } => {
                    Evaluation::new(Verdict::Pass, "cofactor certificate verified")
                }
                TangencyOutcome::NotTangent { residuals } => {
                    let got: Vec<String> = residuals.iter().map(|r| r.to_string()).collect();
                    let ok = witness.as_ref().map_or(true, |w| *w == got);
                    Evaluation::new(Verdict::Fail, format!("residuals [{}]", got.join(", ")))
                        .witness(ok)
                }
            }
        }
        FirstIntegral { field, element } => {
            let f = env.field(field)?;
            let e = RingElement::new(f.ring(), parse_polynomial(f.ring().vars(), element)?);
            if kernel_member(f, &e)? {
                Evaluation::new(Verdict::Pass, format!("{element} is a first integral"))
            } else {
                Evaluation::new(Verdict::Fail, format!("image is {}", f.apply(&e)?))
            }
        }
        Divergence { field, form, value } => {
            let f = env.field(field)?;
            let chart = env.form(form)?;
            let div = divergence(&restrict_to_chart(f, chart)?);
            let expected = parse_expression(chart.chart_vars(), value)?;
            if div == expected {
                Evaluation::new(Verdict::Pass, format!("divergence {div}"))
            } else {
                Evaluation::new(Verdict::Fail, format!("divergence {div}, stated {expected}"))
            }
        }
        Bracket { left, right, result } => {
            let l = env.field(left)?;
            let r = env.field(right)?;
            let got = bracket(l, r)?;
            let ring = l.ring();
            let coeffs = ring
                .vars()
                .names()
                .iter()
                .map(|v| match result.get(v) {
                    Some(s) => parse_polynomial(ring.vars(), s),
                    None => Ok(crate::poly::Polynomial::zero(ring.vars())),
                })
                .collect::<Result<Vec<_>>>()?;
            let expected = VectorField::new(ring, coeffs);
            if got == expected {
                Evaluation::new(Verdict::Pass, format!("[{left}, {right}] = {got}"))
            } else {
                Evaluation::new(Verdict::Fail, format!("bracket is {got}"))
            }
        }
        LndDegree { field, element, degree, bound } => {
            let f = env.field(field)?;
            let e = RingElement::new(f.ring(), parse_polynomial(f.ring().vars(), element)?);
            match lnd_degree(f, &e, bound.unwrap_or(cfg.lnd_bound))? {
                Bounded::Within(d) if d == *degree => {
                    Evaluation::new(Verdict::Pass, format!("degree {d}"))
                }
                Bounded::Within(d) => {
                    Evaluation::new(Verdict::Fail, format!("degree {d}, stated {degree}"))
                }
                Bounded::Exceeded { bound } => Evaluation::new(
                    Verdict::Inconclusive,
                    format!("no vanishing within bound {bound}"),
                ),
            }
        }
        LndCertify { field, degrees, bound } => {
            let f = env.field(field)?;
            match lnd_certify(f, bound.unwrap_or(cfg.lnd_bound))? {
                Bounded::Within(cert) if cert.degrees == *degrees => {
                    Evaluation::new(Verdict::Pass, format!("degrees {:?}", cert.degrees))
                }
                Bounded::Within(cert) => Evaluation::new(
                    Verdict::Fail,
                    format!("degrees {:?}, stated {:?}", cert.degrees, degrees),
                ),
                Bounded::Exceeded { bound } => Evaluation::new(
                    Verdict::Inconclusive,
                    format!("not nilpotent within bound {bound}"),
                ),
            }
        }
        KernelLinear { field, unsatisfied } => {
            let f = env.field(field)?;
            match kernel_linear_certify(f, None)? {
                KernelLinearOutcome::Certified(cert) => Evaluation::new(
                    Verdict::Pass,
                    cert.invariants(f.ring()).join("; "),
                ),
                KernelLinearOutcome::Failure { unsatisfied: got } => {
                    let ok = unsatisfied.is_empty() || *unsatisfied == got;
                    Evaluation::new(
                        Verdict::Fail,
                        format!("unsatisfied variables [{}]", got.join(", ")),
                    )
                    .witness(ok)
                }
            }
        }
        FlowImage { field, point, time, lambda, image, exact } => {
            let f = env.field(field)?;
            let p = env.point(point)?;
            let expected = parse_coords(image)?;
            let Some(fl) = any_flow(f, cfg.lnd_bound)? else {
                return Ok(Evaluation::new(
                    Verdict::Inconclusive,
                    "no flow certificate",
                ));
            };
            match (time, lambda) {
                (Some(t), None) => {
                    let t = parse_rational(t)
                        .ok_or_else(|| Error::Invalid(format!("bad time `{t}`")))?;
                    let img = flow_evaluate_coords(&fl, &t, p.coords(), cfg.bits)?;
                    if *exact {
                        if img.exact && img.coords == expected {
                            Evaluation::new(Verdict::Pass, "image matches exactly")
                        } else {
                            Evaluation::new(
                                Verdict::Fail,
                                format!("image [{}]", join_coords(&img.coords)),
                            )
                        }
                    } else {
                        let d = sup_dist(&img.coords, &expected);
                        if d <= cfg.default_tol {
                            Evaluation::new(
                                Verdict::Pass,
                                format!("within {}", decimal_string(&d, 15)),
                            )
                        } else {
                            Evaluation::new(
                                Verdict::Fail,
                                format!("distance {}", decimal_string(&d, 15)),
                            )
                        }
                    }
                }
                (None, Some(l)) => {
                    let l = parse_rational(l)
                        .ok_or_else(|| Error::Invalid(format!("bad exp-unit `{l}`")))?;
                    match kernel_linear_lambda_orbit(&fl, p.coords(), &l)? {
                        Some(coords) if coords == expected => {
                            Evaluation::new(Verdict::Pass, "orbit point matches exactly")
                        }
                        Some(coords) => Evaluation::new(
                            Verdict::Fail,
                            format!("orbit point [{}]", join_coords(&coords)),
                        ),
                        None => Evaluation::new(
                            Verdict::Inconclusive,
                            "orbit not rational at this exp-unit",
                        ),
                    }
                }
                _ => {
                    return Err(Error::Invalid(
                        "flow-image needs exactly one of `time` or `lambda`".into(),
                    ))
                }
            }
        }
        FlowLaws { field, samples, tol } => {
            let f = env.field(field)?;
            let Some(fl) = any_flow(f, cfg.lnd_bound)? else {
                return Ok(Evaluation::new(
                    Verdict::Inconclusive,
                    "no flow certificate",
                ));
            };
            if fl.is_polynomial() {
                let group = poly_flow_group_law_holds(&fl)?;
                let inverse = poly_flow_inverse_law_holds(&fl)?;
                if group && inverse {
                    Evaluation::new(Verdict::Pass, "group and inverse laws hold exactly")
                } else {
                    Evaluation::new(
                        Verdict::Fail,
                        format!("group {group}, inverse {inverse}"),
                    )
                }
            } else {
                let tol = match tol {
                    Some(t) => parse_tol(t)?,
                    None => cfg.default_tol.clone(),
                };
                if samples.is_empty() {
                    return Err(Error::Invalid(
                        "exp-unit flow laws need at least one sample".into(),
                    ));
                }
                let mut worst = Rational::zero();
                for smp in samples {
                    let s = parse_rational(&smp.s)
                        .ok_or_else(|| Error::Invalid(format!("bad time `{}`", smp.s)))?;
                    let t = parse_rational(&smp.t)
                        .ok_or_else(|| Error::Invalid(format!("bad time `{}`", smp.t)))?;
                    let p = env.point(&smp.point)?;
                    let at_s = flow_evaluate_coords(&fl, &s, p.coords(), cfg.bits)?.coords;
                    let chained = flow_evaluate_coords(&fl, &t, &at_s, cfg.bits)?.coords;
                    let direct =
                        flow_evaluate_coords(&fl, &(&s + &t), p.coords(), cfg.bits)?.coords;
                    let back = flow_evaluate_coords(&fl, &(-s), &at_s, cfg.bits)?.coords;
                    let d = sup_dist(&chained, &direct).max(sup_dist(&back, p.coords()));
                    if d > worst {
                        worst = d;
                    }
                }
                if worst <= tol {
                    Evaluation::new(
                        Verdict::Pass,
                        format!("worst law residual {}", decimal_string(&worst, 15)),
                    )
                } else {
                    Evaluation::new(
                        Verdict::Fail,
                        format!("law residual {}", decimal_string(&worst, 15)),
                    )
                }
            }
        }
        FlowVolume { field, form, points, time, tol } => {
            let f = env.field(field)?;
            let chart = env.form(form)?;
            let pts = env.point_set(points)?;
            let t = parse_rational(time)
                .ok_or_else(|| Error::Invalid(format!("bad time `{time}`")))?;
            let tol = parse_tol(tol)?;
            let Some(fl) = any_flow(f, cfg.lnd_bound)? else {
                return Ok(Evaluation::new(
                    Verdict::Inconclusive,
                    "no flow certificate",
                ));
            };
            let chart_points: Vec<Vec<Rational>> = pts
                .iter()
                .map(|p| {
                    chart
                        .chart_indices()
                        .iter()
                        .map(|&i| p.coords()[i].clone())
                        .collect()
                })
                .collect();
            let worst = flow_volume_check(&fl, &t, chart, &chart_points, cfg.bits)?;
            if worst <= tol {
                Evaluation::new(
                    Verdict::Pass,
                    format!("worst |det - 1| is {}", decimal_string(&worst, 15)),
                )
            } else {
                Evaluation::new(
                    Verdict::Fail,
                    format!("|det - 1| reaches {}", decimal_string(&worst, 15)),
                )
            }
        }
        Automorphism { field, time, form } => {
            let f = env.field(field)?;
            let t = parse_rational(time)
                .ok_or_else(|| Error::Invalid(format!("bad time `{time}`")))?;
            let Some(fl) = any_flow(f, cfg.lnd_bound)? else {
                return Ok(Evaluation::new(
                    Verdict::Inconclusive,
                    "no flow certificate",
                ));
            };
            if !fl.is_polynomial() {
                return Ok(Evaluation::new(
                    Verdict::Inconclusive,
                    "flow is not polynomial; no exact automorphism to verify",
                ));
            }
            let phi = poly_automorphism_at(&fl, &t)?;
            let chart = match form {
                Some(w) => Some(env.form(w)?),
                None => None,
            };
            let report = verify_automorphism(&phi, chart)?;
            if report.all_ok() {
                Evaluation::new(Verdict::Pass, "relations, inverse, and volume all verified")
            } else {
                Evaluation::new(
                    Verdict::Fail,
                    format!(
                        "relations {} inverse {} volume {:?} factor {:?}",
                        report.relations_preserved,
                        report.inverse_ok,
                        report.volume_ok,
                        report.volume_factor
                    ),
                )
            }
        }
        Span { fields, point, dimension } => {
            let fs = fields
                .iter()
                .map(|n| env.field(n).cloned())
                .collect::<Result<Vec<_>>>()?;
            let p = env.point(point)?;
            let report = span_at_point(&fs, p)?;
            if report.field_rank == *dimension {
                Evaluation::new(
                    Verdict::Pass,
                    format!(
                        "rank {} of tangent dimension {}",
                        report.field_rank, report.tangent_dim
                    ),
                )
            } else {
                Evaluation::new(
                    Verdict::Fail,
                    format!("rank {}, stated {}", report.field_rank, dimension),
                )
            }
        }
        UnitCertificate { variety, generators, max_degree, degree } => {
            let ring = env.variety(variety)?;
            let gens = generators
                .iter()
                .map(|s| parse_polynomial(ring.vars(), s))
                .collect::<Result<Vec<_>>>()?;
            match unit_ideal_certificate(&gens, *max_degree)? {
                Some(cert) => {
                    if !cert.verify(&gens) {
                        return Err(Error::Invalid(
                            "unit certificate failed re-verification".into(),
                        ));
                    }
                    let ok = degree.map_or(true, |d| d == cert.degree);
                    Evaluation::new(
                        Verdict::Pass,
                        format!("cofactors of degree {}", cert.degree),
                    )
                    .witness(ok)
                }
                None => Evaluation::new(
                    Verdict::Inconclusive,
                    format!("no cofactors up to degree {max_degree}"),
                ),
            }
        }
        SemiCompat { sigma, delta, ker_sigma, ker_delta, witness, degree } => {
            let s = env.field(sigma)?;
            let d = env.field(delta)?;
            let parse_list = |list: &[String]| -> Result<Vec<RingElement>> {
                list.iter()
                    .map(|e| Ok(RingElement::new(s.ring(), parse_polynomial(s.ring().vars(), e)?)))
                    .collect()
            };
            let w = RingElement::new(s.ring(), parse_polynomial(s.ring().vars(), witness)?);
            let report = semi_compatibility_evidence(
                s,
                d,
                &parse_list(ker_sigma)?,
                &parse_list(ker_delta)?,
                &w,
                *degree,
            )?;
            if report.succeeded() {
                Evaluation::new(
                    Verdict::Pass,
                    format!(
                        "{} monomials expressed from {} products; {}",
                        report.monomials_total, report.products, report.note
                    ),
                )
            } else {
                Evaluation::new(
                    Verdict::Fail,
                    format!("unexpressed monomials [{}]", report.failed_monomials.join(", ")),
                )
            }
        }
        Compat { sigma, delta, witness, mode } => {
            let s = env.field(sigma)?;
            let d = env.field(delta)?;
            let a = RingElement::new(s.ring(), parse_polynomial(s.ring().vars(), witness)?);
            let Bounded::Within(cs) = lnd_certify(s, cfg.lnd_bound)? else {
                return Ok(Evaluation::new(
                    Verdict::Inconclusive,
                    "first field not certified nilpotent within bound",
                ));
            };
            let second = if let Bounded::Within(cd) = lnd_certify(d, cfg.lnd_bound)? {
                SecondCertificate::Lnd(cd)
            } else if let Some(eigen) = diagonal_semisimple_certify(d) {
                SecondCertificate::DiagonalSemisimple(eigen)
            } else {
                return Ok(Evaluation::new(
                    Verdict::Inconclusive,
                    "second field neither certified nilpotent nor diagonal",
                ));
            };
            let report = compatibility_check(s, &cs, d, &second, &a)?;
            let ok = mode.as_ref().map_or(true, |m| m == report.mode);
            if report.holds {
                Evaluation::new(
                    Verdict::Pass,
                    format!(
                        "{}: kernel-shift {}, degrees ({:?}, {:?})",
                        report.mode,
                        report.condition_kernel_shift,
                        report.sigma_degree,
                        report.delta_degree
                    ),
                )
                .witness(ok)
            } else {
                Evaluation::new(Verdict::Fail, "neither compatibility condition holds")
                    .witness(ok)
            }
        }
        ClosureMember { generators, target, max_degree, depth, form, obstruction } => {
            let gens = generators
                .iter()
                .map(|n| env.field(n).cloned())
                .collect::<Result<Vec<_>>>()?;
            let tgt = env.field(target)?;
            let chart = match form {
                Some(w) => Some(env.form(w)?),
                None => None,
            };
            let basis = closure_span(&gens, *max_degree, *depth)?;
            match closure_member(&basis, tgt, chart)? {
                Membership::Member { coordinates } => Evaluation::new(
                    Verdict::Pass,
                    format!(
                        "member over a rank-{} basis ({} nonzero coordinates)",
                        basis.rank(),
                        coordinates.iter().filter(|c| !c.is_zero()).count()
                    ),
                ),
                Membership::NotInSpan { obstruction: got } => {
                    let ok = !*obstruction || got.is_some();
                    let detail = match got {
                        Some(msg) => msg,
                        None => format!(
                            "outside the rank-{} span within bounds",
                            basis.rank()
                        ),
                    };
                    Evaluation::new(Verdict::Fail, detail).witness(ok)
                }
                Membership::DegreeExceedsBound { degree, bound } => Evaluation::new(
                    Verdict::Inconclusive,
                    format!("target degree {degree} exceeds bound {bound}"),
                ),
            }
        }
        Transitivity { pairs, points, target, tol, max_iter } => {
            let resolved = resolve_pairs(env, pairs)?;
            let pts = resolve_points(env, points)?;
            let tgt = parse_coords(target)?;
            let tol = parse_tol(tol)?;
            match build_transitivity_plan(
                &resolved,
                &pts,
                &tgt,
                &tol,
                cfg.bits,
                max_iter.unwrap_or(cfg.max_iter),
            ) {
                Ok(plan) => {
                    for p in &plan.fixed {
                        let (img, res) = plan.apply(p.coords(), cfg.bits)?;
                        if img != p.coords() || !res.is_zero() {
                            return Ok(Evaluation::new(
                                Verdict::Fail,
                                "a fixed point moved under the composed flow",
                            ));
                        }
                    }
                    Evaluation::new(
                        Verdict::Pass,
                        format!(
                            "target within {} after {} iterations; worst residual {}",
                            decimal_string(&plan.target_error, 15),
                            plan.iterations,
                            decimal_string(&plan.max_residual, 15)
                        ),
                    )
                }
                Err(Error::SeparationViolated { integral, i, l, value }) => Evaluation::new(
                    Verdict::Fail,
                    format!("integral {integral} equal at points {i} and {l} (value {value})"),
                ),
                Err(Error::NoConvergence { iterations, residual }) => Evaluation::new(
                    Verdict::Inconclusive,
                    format!("no convergence after {iterations} iterations (residual {residual})"),
                ),
                Err(e) => return Err(e),
            }
        }
        Separation { pairs, points } => {
            let resolved = resolve_pairs(env, pairs)?;
            let pts = resolve_points(env, points)?;
            match check_separation(&resolved, &pts) {
                Ok(()) => Evaluation::new(Verdict::Pass, "all integral values pairwise distinct"),
                Err(Error::SeparationViolated { integral, i, l, value }) => Evaluation::new(
                    Verdict::Fail,
                    format!("integral {integral} equal at points {i} and {l} (value {value})"),
                ),
                Err(e) => return Err(e),
            }
        }
        Perturb { pairs, points } => {
            let resolved = resolve_pairs(env, pairs)?;
            let pts = resolve_points(env, points)?;
            match perturb_to_separated(&resolved, &pts) {
                Ok((adjusted, record)) => {
                    check_separation(&resolved, &adjusted)?;
                    let detail = match record {
                        Some(r) => format!(
                            "moved point {} along stage {} with exp-unit {}",
                            r.moved_point, r.pair_index, r.parameter
                        ),
                        None => "already separated".into(),
                    };
                    Evaluation::new(Verdict::Pass, detail)
                }
                Err(Error::CannotSeparate(msg)) => Evaluation::new(Verdict::Fail, msg),
                Err(e) => return Err(e),
            }
        }
        Line { variety, name, param, defining, witness } => {
            let ring = env.variety(variety)?;
            let tvars = varset(&["t"])?;
            let line = crate::families::Line {
                name: name.clone(),
                param: param
                    .iter()
                    .map(|p| parse_polynomial(&tvars, p))
                    .collect::<Result<Vec<_>>>()?,
                defining: parse_polynomial(ring.vars(), defining)?,
            };
            let report = verify_line(ring, &line)?;
            if report.passes() {
                Evaluation::new(Verdict::Pass, report.to_string())
            } else {
                let mut got: Vec<String> = report
                    .relation_residuals
                    .iter()
                    .map(|p| p.to_string())
                    .collect();
                got.push(report.defining_residual.to_string());
                let ok = witness.as_ref().map_or(true, |w| *w == got);
                Evaluation::new(Verdict::Fail, report.to_string()).witness(ok)
            }
        }
    })
}

fn join_coords(coords: &[Rational]) -> String {
    coords
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn resolve_pairs(
    env: &Environment,
    pairs: &[(String, String)],
) -> Result<Vec<(VectorField, RingElement)>> {
    pairs
        .iter()
        .map(|(f, e)| {
            let field = env.field(f)?.clone();
            let elem =
                RingElement::new(field.ring(), parse_polynomial(field.ring().vars(), e)?);
            Ok((field, elem))
        })
        .collect()
}

fn resolve_points(env: &Environment, names: &[String]) -> Result<Vec<Point>> {
    names.iter().map(|n| env.point(n).cloned()).collect()
}

pub fn run_check(env: &Environment, check: &CheckDoc, cfg: &RunConfig) -> Result<CheckOutcome> {
    let eval = evaluate(env, &check.spec, cfg)
        .map_err(|e| Error::Invalid(format!("check `{}`: {e}", check.id)))?;
    let category = matches!(
        (eval.verdict, check.expect),
        (Verdict::Pass, Expectation::Pass)
            | (Verdict::Fail, Expectation::Fail)
            | (Verdict::Inconclusive, Expectation::Inconclusive)
    );
    Ok(CheckOutcome {
        id: check.id.clone(),
        expect: check.expect,
        verdict: eval.verdict,
        matched: category && eval.witness_ok,
        detail: eval.detail,
    })
}

#[derive(Debug, Serialize)]
pub struct CorpusReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl CorpusReport {
    pub fn matched(&self) -> usize {
        self.outcomes.iter().filter(|o| o.matched).count()
    }

    pub fn total(&self) -> usize {
        self.outcomes.len()
    }

    /// 0 all matched; 1 some hard mismatch; 2 only inconclusive-shaped
    /// mismatches. Input errors surface as `Err` before a report exists.
    pub fn exit_code(&self) -> i32 {
        let mut code = 0;
        for o in &self.outcomes {
            if o.matched {
                continue;
            }
            let soft = o.verdict == Verdict::Inconclusive
                || o.expect == Expectation::Inconclusive;
            if soft {
                code = code.max(2);
            } else {
                return 1;
            }
        }
        code
    }
}

pub fn run_corpus(
    env: &Environment,
    checks: &[CheckDoc],
    cfg: &RunConfig,
) -> Result<CorpusReport> {
    let mut outcomes = checks
        .iter()
        .map(|c| run_check(env, c, cfg))
        .collect::<Result<Vec<_>>>()?;
    outcomes.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(CorpusReport { outcomes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn write(dir: &Path, name: &str, body: &str) {
        std::fs::write(dir.join(name), body).unwrap();
    }

    fn scratch(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("avf-files-{tag}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn surface_docs(dir: &Path) {
        write(
            dir,
            "variety-s.json",
            r#"{"type":"variety","name":"S","vars":["x","y","z"],"relations":["x + y + x*y*z - 1"]}"#,
        );
        write(
            dir,
            "field-nu1.json",
            r#"{"type":"field","name":"nu1","variety":"S","coeffs":{"x":"1 + x*z","y":"-(1 + y*z)"}}"#,
        );
        write(
            dir,
            "form-torus.json",
            r#"{"type":"form","name":"torus","variety":"S","chart_vars":["x","y"],"substitutions":{"z":"(1 - x - y)/(x*y)"},"unit":"1/(x*y)"}"#,
        );
        write(
            dir,
            "point-b.json",
            r#"{"type":"point","name":"b","variety":"S","coords":["1/2","1/4","2"]}"#,
        );
    }

    #[test]
    fn loads_and_runs_a_small_corpus() {
        let dir = scratch("ok");
        surface_docs(&dir);
        write(
            &dir,
            "check-tangency.json",
            r#"{"type":"check","id":"nu1-tangency","check":"tangency","field":"nu1","expect":"pass"}"#,
        );
        write(
            &dir,
            "check-div.json",
            r#"{"type":"check","id":"nu1-divergence","check":"divergence","field":"nu1","form":"torus","value":"0","expect":"pass"}"#,
        );
        write(
            &dir,
            "check-integral.json",
            r#"{"type":"check","id":"nu1-integral","check":"first-integral","field":"nu1","element":"z","expect":"pass"}"#,
        );
        write(
            &dir,
            "check-orbit.json",
            r#"{"type":"check","id":"nu1-orbit","check":"flow-image","field":"nu1","point":"b","lambda":"5/4","image":["3/4","1/10","2"],"exact":true,"expect":"pass"}"#,
        );
        let (env, checks) = load_dir(&dir).unwrap();
        assert_eq!(checks.len(), 4);
        let report = run_corpus(&env, &checks, &RunConfig::default()).unwrap();
        assert_eq!(report.matched(), 4);
        assert_eq!(report.exit_code(), 0);
        let ids: Vec<&str> = report.outcomes.iter().map(|o| o.id.as_str()).collect();
        assert_eq!(
            ids,
            ["nu1-divergence", "nu1-integral", "nu1-orbit", "nu1-tangency"]
        );
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn expected_failures_match_on_witnesses() {
        let dir = scratch("witness");
        surface_docs(&dir);
        write(
            &dir,
            "field-broken.json",
            r#"{"type":"field","name":"broken","variety":"S","coeffs":{"x":"x*y","z":"-(1 + x*z)"}}"#,
        );
        write(
            &dir,
            "check-broken.json",
            r#"{"type":"check","id":"broken-tangency","check":"tangency","field":"broken","witness":["x^2 - y^2 - x + y"],"expect":"fail"}"#,
        );
        let (env, checks) = load_dir(&dir).unwrap();
        let report = run_corpus(&env, &checks, &RunConfig::default()).unwrap();
        assert_eq!(report.exit_code(), 0, "{:?}", report.outcomes);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn exit_codes_rank_hard_over_soft() {
        let dir = scratch("codes");
        surface_docs(&dir);
        // diagonal field is neither nilpotent nor kernel-linear certifiable
        write(
            &dir,
            "field-diag.json",
            r#"{"type":"field","name":"diag","variety":"S","coeffs":{"x":"x","y":"-y"}}"#,
        );
        write(
            &dir,
            "check-soft.json",
            r#"{"type":"check","id":"a-soft","check":"lnd-certify","field":"diag","degrees":[1,1,0],"expect":"pass"}"#,
        );
        let (env, checks) = load_dir(&dir).unwrap();
        let report = run_corpus(&env, &checks, &RunConfig::default()).unwrap();
        assert_eq!(report.exit_code(), 2);

        write(
            &dir,
            "check-hard.json",
            r#"{"type":"check","id":"b-hard","check":"first-integral","field":"nu1","element":"x","expect":"pass"}"#,
        );
        let (env, checks) = load_dir(&dir).unwrap();
        let report = run_corpus(&env, &checks, &RunConfig::default()).unwrap();
        assert_eq!(report.exit_code(), 1);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn malformed_documents_are_input_errors() {
        assert!(parse_document(r#"{"type":"nonsense","name":"x"}"#).is_err());
        let dir = scratch("badref");
        write(
            &dir,
            "check-missing.json",
            r#"{"type":"check","id":"m","check":"tangency","field":"ghost","expect":"pass"}"#,
        );
        let (env, checks) = load_dir(&dir).unwrap();
        assert!(run_corpus(&env, &checks, &RunConfig::default()).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn reruns_are_identical(){
        let dir = scratch("det");
        surface_docs(&dir);
        write(
            &dir,
            "check-tan.json",
            r#"{"type":"check","id":"t","check":"tangency","field":"nu1","expect":"pass"}"#,
        );
        let (env, checks) = load_dir(&dir).unwrap();
        let a = run_corpus(&env, &checks, &RunConfig::default()).unwrap();
        let b = run_corpus(&env, &checks, &RunConfig::default()).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
