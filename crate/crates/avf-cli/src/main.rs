//! The `avf` binary: one subcommand per library operation plus the corpus
//! verifier.
//!
//! Document arguments (fields, varieties, points, forms) accept either a name
//! resolved against the `--env` directory or a path to a single JSON document;
//! point arguments additionally accept inline coordinates like `1,1/2,-1`.
//!
//! Exit codes: 0 verified, 1 check failed, 2 inconclusive or out of bounds,
//! 3 input error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num::{Signed, Zero};
use serde_json::{json, Value};

use avf_core::density::{
    build_transitivity_plan, closure_member, closure_span, compatibility_check,
    diagonal_semisimple_certify, perturb_to_separated, Membership, SecondCertificate,
};
use avf_core::derivation::{bracket, span_at_point, tangency_check, Tangency, VectorField};
use avf_core::files::{
    any_flow, load_dir, parse_document, run_check, CorpusReport, Document, Environment, RunConfig,
};
use avf_core::flow::{
    flow, flow_evaluate_coords, kernel_linear_certify, kernel_linear_lambda_orbit, lnd_certify,
    lnd_degree, poly_automorphism_at, verify_automorphism, Bounded, FlowExpression, FlowPart,
    IntegrabilityCertificate, KernelLinearOutcome, DEFAULT_LND_BOUND,
};
use avf_core::numeric::{decimal_string, parse_rational};
use avf_core::parse::{parse_expression, parse_polynomial};
use avf_core::variety::{same_ring, unit_ideal_certificate};
use avf_core::volume::{divergence, restrict_to_chart, ChartRef};
use avf_core::{varset, Error, Point, Rational, RationalFunction, Result, Ring, RingElement};

#[derive(Parser)]
#[command(
    name = "avf",
    version,
    about = "Exact checks for polynomial vector fields on affine varieties"
)]
struct Cli {
    /// Output format for results (errors always go to stderr as text).
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Working precision in bits for numeric flow evaluation.
    #[arg(long, global = true, default_value_t = 256, value_name = "BITS")]
    precision: u32,

    /// Worker threads for corpus verification (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Monomial degree bound for closure and certificate searches.
    #[arg(long, global = true, value_name = "D")]
    max_degree: Option<u32>,

    /// Bracket depth bound for closure spans.
    #[arg(long, global = true, value_name = "B")]
    depth: Option<u32>,

    /// Numeric tolerance as a rational or decimal, e.g. 1e-9.
    #[arg(long, global = true, value_name = "T")]
    tol: Option<String>,

    /// Directory of definition documents for resolving names.
    #[arg(long, global = true, value_name = "DIR")]
    env: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse an expression and print its canonical form.
    Parse {
        expr: String,
        /// Comma-separated variable list, e.g. x,y,z.
        #[arg(long, value_delimiter = ',', required = true)]
        vars: Vec<String>,
    },
    /// Normal form of a polynomial in a variety's coordinate ring.
    Nf {
        expr: String,
        #[arg(long)]
        variety: String,
    },
    /// Lie bracket of two tangent fields.
    Bracket { left: String, right: String },
    /// Apply a field to a ring element as a derivation.
    Apply { field: String, expr: String },
    /// Tangency of a field to its variety's relations.
    Tangent { field: String },
    /// Divergence of a field in a chart volume form.
    Div {
        field: String,
        #[arg(long)]
        form: String,
    },
    /// Nilpotency degree of a field on one element.
    LndDegree {
        field: String,
        expr: String,
        #[arg(long, default_value_t = DEFAULT_LND_BOUND)]
        bound: u32,
    },
    /// Certify a field as locally nilpotent.
    LndCertify {
        field: String,
        #[arg(long, default_value_t = DEFAULT_LND_BOUND)]
        bound: u32,
    },
    /// Certify per-variable kernel-linear structure.
    KernelLinear { field: String },
    /// Closed-form flow of a certified field: print it, or evaluate at a point.
    Flow {
        field: String,
        /// Flow time (rational or decimal).
        #[arg(long)]
        t: Option<String>,
        /// Exact orbit parameter lambda = exp(c t) for kernel-linear flows.
        #[arg(long, conflicts_with = "t")]
        lambda: Option<String>,
        /// Start point: a name, a document path, or inline coordinates.
        #[arg(long)]
        at: Option<String>,
        #[arg(long, default_value_t = DEFAULT_LND_BOUND)]
        bound: u32,
    },
    /// Verify the time-t polynomial flow map as an exact automorphism.
    VerifyAut {
        field: String,
        #[arg(long)]
        t: String,
        /// Chart volume form for the volume-factor check.
        #[arg(long)]
        form: Option<String>,
        #[arg(long, default_value_t = DEFAULT_LND_BOUND)]
        bound: u32,
    },
    /// Rank of a set of fields at a point against the tangent space.
    Span {
        #[arg(required = true)]
        fields: Vec<String>,
        #[arg(long)]
        at: String,
        /// Expected dimension; when given the exit code reflects the comparison.
        #[arg(long)]
        dimension: Option<usize>,
    },
    /// Search for a unit-ideal certificate sum(c_i * g_i) = 1.
    UnitCert {
        /// Generator expressions over the variety's variables.
        #[arg(required = true)]
        gens: Vec<String>,
        #[arg(long)]
        variety: String,
    },
    /// Compatibility of a locally nilpotent field with a second certified field.
    Compat {
        #[arg(long)]
        sigma: String,
        #[arg(long)]
        delta: String,
        /// Kernel-product witness expression.
        #[arg(long)]
        witness: String,
        #[arg(long, default_value_t = DEFAULT_LND_BOUND)]
        bound: u32,
    },
    /// Bounded Lie-closure span and membership.
    Closure {
        #[arg(long, num_args = 1.., required = true)]
        gens: Vec<String>,
        #[arg(long, num_args = 0..)]
        targets: Vec<String>,
        /// Chart volume form enabling the divergence obstruction.
        #[arg(long)]
        form: Option<String>,
    },
    /// Build and verify a transitivity plan moving the first point to a target.
    Transit {
        /// Field/integral pairs as NAME:EXPR, e.g. s-nu1:z.
        #[arg(long, num_args = 1.., required = true)]
        pairs: Vec<String>,
        /// Points; the first one moves, the rest stay fixed.
        #[arg(long, num_args = 1.., required = true)]
        points: Vec<String>,
        /// Target coordinates for the first point, e.g. 3/4,1/10,2.
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        /// Resolve integral-value collisions by an exact perturbation first.
        #[arg(long)]
        perturb: bool,
    },
    /// Run a corpus directory and compare outcomes against expectations.
    Verify {
        dir: PathBuf,
        /// Only run checks whose id matches this glob (* and ? wildcards).
        #[arg(long)]
        filter: Option<String>,
    },
}

struct Outcome {
    code: u8,
    text: String,
    json: Value,
}

impl Outcome {
    fn new(code: u8, text: impl Into<String>, json: Value) -> Self {
        Outcome {
            code,
            text: text.into(),
            json,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(out) => {
            match cli.format {
                Format::Text => println!("{}", out.text),
                Format::Json => println!(
                    "{}",
                    serde_json::to_string_pretty(&out.json).expect("report serializes")
                ),
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}

/// Budget and convergence exhaustion are inconclusive (2); everything else an
/// error produces is an input problem (3).
fn exit_for(e: &Error) -> u8 {
    match e {
        Error::BudgetExceeded { .. } | Error::NoConvergence { .. } => 2,
        _ => 3,
    }
}

fn default_tol() -> Rational {
    Rational::new(1.into(), 1_000_000_000.into())
}

fn parse_tol(s: &str) -> Result<Rational> {
    match parse_rational(s) {
        Some(t) if t.is_positive() => Ok(t),
        _ => Err(Error::Invalid(format!("tolerance `{s}` must be positive"))),
    }
}

fn load_env(dir: Option<&Path>) -> Result<Environment> {
    match dir {
        Some(d) => {
            let (env, _) = load_dir(d)?;
            Ok(env)
        }
        None => Ok(Environment::default()),
    }
}

/// Turns a document-path argument into a registered name; plain names pass
/// through untouched.
fn materialize(env: &mut Environment, spec: &str) -> Result<String> {
    let path = Path::new(spec);
    if !path.is_file() {
        return Ok(spec.to_string());
    }
    let doc = parse_document(&std::fs::read_to_string(path)?)?;
    // A same-named document already loaded from --env wins over the file.
    let (name, loaded) = match &doc {
        Document::Variety(d) => (d.name.clone(), env.varieties.contains_key(&d.name)),
        Document::Field(d) => (d.name.clone(), env.fields.contains_key(&d.name)),
        Document::Point(d) => (d.name.clone(), env.points.contains_key(&d.name)),
        Document::PointSet(d) => (d.name.clone(), env.point_sets.contains_key(&d.name)),
        Document::Form(d) => (d.name.clone(), env.forms.contains_key(&d.name)),
        Document::Check(_) => {
            return Err(Error::Invalid(format!(
                "`{spec}` is a check document; expected a definition"
            )))
        }
    };
    if !loaded {
        env.register(doc)?;
    }
    Ok(name)
}

fn get_field<'e>(env: &'e Environment, name: &str) -> Result<&'e VectorField> {
    env.fields
        .get(name)
        .ok_or_else(|| Error::Invalid(format!("unknown field `{name}`")))
}

fn get_variety<'e>(env: &'e Environment, name: &str) -> Result<&'e Ring> {
    env.varieties
        .get(name)
        .ok_or_else(|| Error::Invalid(format!("unknown variety `{name}`")))
}

fn get_form<'e>(env: &'e Environment, name: &str) -> Result<&'e ChartRef> {
    env.forms
        .get(name)
        .ok_or_else(|| Error::Invalid(format!("unknown form `{name}`")))
}

/// Resolves a point spec against the environment, falling back to inline
/// comma-separated coordinates interpreted in `ring`.
fn resolve_point(env: &Environment, ring: &Ring, spec: &str) -> Result<Point> {
    if let Some(p) = env.points.get(spec) {
        if !same_ring(p.ring(), ring) {
            return Err(Error::Invalid(format!(
                "point `{spec}` lives on `{}`, not `{}`",
                p.ring().name(),
                ring.name()
            )));
        }
        return Ok(p.clone());
    }
    let coords = spec
        .split(',')
        .map(|s| parse_rational(s.trim()))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Invalid(format!("unknown point `{spec}`")))?;
    Point::new(ring, coords)
}

fn parse_coord_list(spec: &str) -> Result<Vec<Rational>> {
    spec.split(',')
        .map(|s| {
            parse_rational(s.trim())
                .ok_or_else(|| Error::Invalid(format!("cannot parse coordinate `{s}`")))
        })
        .collect()
}

fn rat_strings(coords: &[Rational]) -> Vec<String> {
    coords.iter().map(Rational::to_string).collect()
}

/// Wraps a printed element in parentheses when it is not a single bare term.
fn paren(s: String) -> String {
    if s.contains(' ') || s.starts_with('-') {
        format!("({s})")
    } else {
        s
    }
}

fn field_json(v: &VectorField) -> Value {
    let ring = v.ring();
    let mut map = serde_json::Map::new();
    for (i, c) in v.coeffs().iter().enumerate() {
        if !c.is_zero() {
            map.insert(ring.vars().name(i).to_string(), json!(c.to_string()));
        }
    }
    Value::Object(map)
}

/// Per-coordinate flow formulas; kernel-linear parts carry exp units.
fn flow_lines(f: &FlowExpression) -> Vec<String> {
    match f {
        FlowExpression::Poly { ring, tvars, images } => {
            let tname = tvars.name(tvars.len() - 1);
            ring.vars()
                .names()
                .iter()
                .zip(images)
                .map(|(x, img)| format!("{x}({tname}) = {img}"))
                .collect()
        }
        FlowExpression::KernelLinear { ring, parts } => ring
            .vars()
            .names()
            .iter()
            .zip(parts)
            .map(|(x, part)| match part {
                FlowPart::Fixed => format!("{x}(t) = {x}"),
                FlowPart::Linear { a, b } => {
                    if a.is_zero() {
                        format!("{x}(t) = {x} + {}*t", paren(b.to_string()))
                    } else if b.is_zero() {
                        format!("{x}(t) = exp({}*t)*{x}", paren(a.to_string()))
                    } else {
                        let a_s = paren(a.to_string());
                        let shift = RationalFunction::new(b.rep().clone(), a.rep().clone())
                            .map(|q| paren(q.to_string()))
                            .unwrap_or_else(|_| "0".into());
                        format!("{x}(t) = exp({a_s}*t)*({x} + {shift}) - {shift}")
                    }
                }
            })
            .collect(),
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let mut env = load_env(cli.env.as_deref())?;
    let tol = match &cli.tol {
        Some(s) => parse_tol(s)?,
        None => default_tol(),
    };
    match &cli.cmd {
        Cmd::Parse { expr, vars } => cmd_parse(expr, vars),
        Cmd::Nf { expr, variety } => {
            let name = materialize(&mut env, variety)?;
            cmd_nf(&env, expr, &name)
        }
        Cmd::Bracket { left, right } => {
            let l = materialize(&mut env, left)?;
            let r = materialize(&mut env, right)?;
            cmd_bracket(&env, &l, &r)
        }
        Cmd::Apply { field, expr } => {
            let f = materialize(&mut env, field)?;
            cmd_apply(&env, &f, expr)
        }
        Cmd::Tangent { field } => {
            let f = materialize(&mut env, field)?;
            cmd_tangent(&env, &f)
        }
        Cmd::Div { field, form } => {
            let f = materialize(&mut env, field)?;
            let w = materialize(&mut env, form)?;
            cmd_div(&env, &f, &w)
        }
        Cmd::LndDegree { field, expr, bound } => {
            let f = materialize(&mut env, field)?;
            cmd_lnd_degree(&env, &f, expr, *bound)
        }
        Cmd::LndCertify { field, bound } => {
            let f = materialize(&mut env, field)?;
            cmd_lnd_certify(&env, &f, *bound)
        }
        Cmd::KernelLinear { field } => {
            let f = materialize(&mut env, field)?;
            cmd_kernel_linear(&env, &f)
        }
        Cmd::Flow {
            field,
            t,
            lambda,
            at,
            bound,
        } => {
            let f = materialize(&mut env, field)?;
            let at = match at {
                Some(a) => Some(materialize(&mut env, a)?),
                None => None,
            };
            cmd_flow(
                &env,
                &f,
                t.as_deref(),
                lambda.as_deref(),
                at.as_deref(),
                *bound,
                cli.precision,
            )
        }
        Cmd::VerifyAut {
            field,
            t,
            form,
            bound,
        } => {
            let f = materialize(&mut env, field)?;
            let w = match form {
                Some(w) => Some(materialize(&mut env, w)?),
                None => None,
            };
            cmd_verify_aut(&env, &f, t, w.as_deref(), *bound)
        }
        Cmd::Span {
            fields,
            at,
            dimension,
        } => {
            let names = fields
                .iter()
                .map(|f| materialize(&mut env, f))
                .collect::<Result<Vec<_>>>()?;
            let at = materialize(&mut env, at)?;
            cmd_span(&env, &names, &at, *dimension)
        }
        Cmd::UnitCert { gens, variety } => {
            let name = materialize(&mut env, variety)?;
            cmd_unit_cert(&env, gens, &name, cli.max_degree.unwrap_or(8))
        }
        Cmd::Compat {
            sigma,
            delta,
            witness,
            bound,
        } => {
            let s = materialize(&mut env, sigma)?;
            let d = materialize(&mut env, delta)?;
            cmd_compat(&env, &s, &d, witness, *bound)
        }
        Cmd::Closure {
            gens,
            targets,
            form,
        } => {
            let gens = gens
                .iter()
                .map(|g| materialize(&mut env, g))
                .collect::<Result<Vec<_>>>()?;
            let targets = targets
                .iter()
                .map(|t| materialize(&mut env, t))
                .collect::<Result<Vec<_>>>()?;
            let form = match form {
                Some(w) => Some(materialize(&mut env, w)?),
                None => None,
            };
            cmd_closure(
                &env,
                &gens,
                &targets,
                form.as_deref(),
                cli.max_degree.unwrap_or(3),
                cli.depth.unwrap_or(3),
            )
        }
        Cmd::Transit {
            pairs,
            points,
            target,
            max_iter,
            perturb,
        } => {
            let points = points
                .iter()
                .map(|p| materialize(&mut env, p))
                .collect::<Result<Vec<_>>>()?;
            let mut field_names = Vec::new();
            let mut integrals = Vec::new();
            for spec in pairs {
                let (f, expr) = spec.split_once(':').ok_or_else(|| {
                    Error::Invalid(format!("pair `{spec}` is not of the form FIELD:INTEGRAL"))
                })?;
                field_names.push(materialize(&mut env, f)?);
                integrals.push(expr.to_string());
            }
            cmd_transit(
                &env,
                &field_names,
                &integrals,
                &points,
                target,
                &tol,
                cli.precision,
                *max_iter,
                *perturb,
            )
        }
        Cmd::Verify { dir, filter } => cmd_verify(
            dir,
            filter.as_deref(),
            cli.jobs,
            RunConfig {
                bits: cli.precision,
                default_tol: tol,
                lnd_bound: DEFAULT_LND_BOUND,
                max_iter: 100,
            },
        ),
    }
}

fn cmd_parse(expr: &str, vars: &[String]) -> Result<Outcome> {
    let vs = varset(vars)?;
    let rf = parse_expression(&vs, expr)?;
    let canonical = rf.to_string();
    let polynomial = rf.denom().is_one();
    Ok(Outcome::new(
        0,
        &canonical,
        json!({ "canonical": canonical, "polynomial": polynomial }),
    ))
}

fn cmd_nf(env: &Environment, expr: &str, variety: &str) -> Result<Outcome> {
    let ring = get_variety(env, variety)?;
    let p = parse_polynomial(ring.vars(), expr)?;
    let nf = ring.normal_form(&p);
    Ok(Outcome::new(
        0,
        nf.to_string(),
        json!({ "normal-form": nf.to_string(), "zero": nf.is_zero() }),
    ))
}

fn cmd_bracket(env: &Environment, left: &str, right: &str) -> Result<Outcome> {
    let l = get_field(env, left)?;
    let r = get_field(env, right)?;
    let b = bracket(l, r)?;
    Ok(Outcome::new(0, b.to_string(), field_json(&b)))
}

fn cmd_apply(env: &Environment, field: &str, expr: &str) -> Result<Outcome> {
    let f = get_field(env, field)?;
    let a = RingElement::new(f.ring(), parse_polynomial(f.ring().vars(), expr)?);
    let img = f.apply(&a)?;
    Ok(Outcome::new(
        0,
        img.to_string(),
        json!({ "image": img.to_string(), "zero": img.is_zero() }),
    ))
}

fn cmd_tangent(env: &Environment, field: &str) -> Result<Outcome> {
    let f = get_field(env, field)?;
    match tangency_check(f) {
        Tangency::Tangent { .. } => Ok(Outcome::new(
            0,
            "tangent: every relation image lies in the relation ideal",
            json!({ "tangent": true }),
        )),
        Tangency::NotTangent { residuals } => {
            let rs: Vec<String> = residuals.iter().map(|p| p.to_string()).collect();
            Ok(Outcome::new(
                1,
                format!("not tangent; residual normal forms: {}", rs.join("; ")),
                json!({ "tangent": false, "residuals": rs }),
            ))
        }
    }
}

fn cmd_div(env: &Environment, field: &str, form: &str) -> Result<Outcome> {
    let f = get_field(env, field)?;
    let chart = get_form(env, form)?;
    let restricted = restrict_to_chart(f, chart)?;
    let d = divergence(&restricted);
    Ok(Outcome::new(
        0,
        format!("div = {d}"),
        json!({ "divergence": d.to_string(), "zero": d.is_zero() }),
    ))
}

fn cmd_lnd_degree(env: &Environment, field: &str, expr: &str, bound: u32) -> Result<Outcome> {
    let f = get_field(env, field)?;
    let a = RingElement::new(f.ring(), parse_polynomial(f.ring().vars(), expr)?);
    match lnd_degree(f, &a, bound)? {
        Bounded::Within(d) => Ok(Outcome::new(
            0,
            format!("degree = {d}"),
            json!({ "degree": d }),
        )),
        Bounded::Exceeded { bound } => Ok(Outcome::new(
            2,
            format!("inconclusive: iterate did not vanish within bound {bound}"),
            json!({ "exceeded-bound": bound }),
        )),
    }
}

fn cmd_lnd_certify(env: &Environment, field: &str, bound: u32) -> Result<Outcome> {
    let f = get_field(env, field)?;
    match lnd_certify(f, bound)? {
        Bounded::Within(cert) => {
            let names = f.ring().vars().names().to_vec();
            let lines: Vec<String> = names
                .iter()
                .zip(&cert.degrees)
                .map(|(x, d)| format!("deg({x}) = {d}"))
                .collect();
            Ok(Outcome::new(
                0,
                format!("locally nilpotent\n{}", lines.join("\n")),
                json!({ "locally-nilpotent": true, "degrees": cert.degrees }),
            ))
        }
        Bounded::Exceeded { bound } => Ok(Outcome::new(
            2,
            format!("inconclusive: some generator iterate survives past bound {bound}"),
            json!({ "locally-nilpotent": Value::Null, "exceeded-bound": bound }),
        )),
    }
}

fn cmd_kernel_linear(env: &Environment, field: &str) -> Result<Outcome> {
    let f = get_field(env, field)?;
    match kernel_linear_certify(f, None)? {
        KernelLinearOutcome::Certified(cert) => {
            let names = f.ring().vars().names().to_vec();
            let mut lines = vec!["kernel-linear".to_string()];
            let mut parts = serde_json::Map::new();
            for (x, pair) in names.iter().zip(&cert.pairs) {
                match pair {
                    None => lines.push(format!("{x}' = 0")),
                    Some((a, b)) => {
                        lines.push(format!("{x}' = ({a})*{x} + ({b})"));
                        parts.insert(
                            x.to_string(),
                            json!({ "a": a.to_string(), "b": b.to_string() }),
                        );
                    }
                }
            }
            Ok(Outcome::new(
                0,
                lines.join("\n"),
                json!({ "kernel-linear": true, "parts": parts }),
            ))
        }
        KernelLinearOutcome::Failure { unsatisfied } => Ok(Outcome::new(
            1,
            format!(
                "no kernel-linear split for: {} (heuristic split; not a nonexistence proof)",
                unsatisfied.join(", ")
            ),
            json!({ "kernel-linear": false, "unsatisfied": unsatisfied }),
        )),
    }
}

fn cmd_flow(
    env: &Environment,
    field: &str,
    t: Option<&str>,
    lambda: Option<&str>,
    at: Option<&str>,
    bound: u32,
    bits: u32,
) -> Result<Outcome> {
    let f = get_field(env, field)?;
    let fexpr = if lambda.is_some() {
        match kernel_linear_certify(f, None)? {
            KernelLinearOutcome::Certified(c) => {
                flow(f, &IntegrabilityCertificate::KernelLinear(c))?
            }
            KernelLinearOutcome::Failure { unsatisfied } => {
                return Ok(Outcome::new(
                    2,
                    format!(
                        "inconclusive: no kernel-linear certificate (unsatisfied: {})",
                        unsatisfied.join(", ")
                    ),
                    json!({ "flow": Value::Null, "unsatisfied": unsatisfied }),
                ))
            }
        }
    } else {
        match any_flow(f, bound)? {
            Some(fx) => fx,
            None => {
                return Ok(Outcome::new(
                    2,
                    format!("inconclusive: no integrability certificate within bound {bound}"),
                    json!({ "flow": Value::Null }),
                ))
            }
        }
    };

    let lines = flow_lines(&fexpr);
    let Some(at) = at else {
        if t.is_some() || lambda.is_some() {
            return Err(Error::Invalid(
                "evaluation needs a start point; pass --at".into(),
            ));
        }
        return Ok(Outcome::new(0, lines.join("\n"), json!({ "flow": lines })));
    };
    let point = resolve_point(env, fexpr.ring(), at)?;
    let names = fexpr.ring().vars().names().to_vec();

    if let Some(l) = lambda {
        let lam = parse_rational(l)
            .ok_or_else(|| Error::Invalid(format!("cannot parse lambda `{l}`")))?;
        return match kernel_linear_lambda_orbit(&fexpr, point.coords(), &lam)? {
            Some(coords) => {
                let body: Vec<String> = names
                    .iter()
                    .zip(&coords)
                    .map(|(x, c)| format!("{x} = {c}"))
                    .collect();
                Ok(Outcome::new(
                    0,
                    format!("exact orbit point at lambda = {lam}\n{}", body.join("\n")),
                    json!({ "coords": rat_strings(&coords), "exact": true }),
                ))
            }
            None => Ok(Outcome::new(
                2,
                "inconclusive: orbit point is not rational in lambda at this point".to_string(),
                json!({ "coords": Value::Null }),
            )),
        };
    }

    let Some(t) = t else {
        return Err(Error::Invalid(
            "evaluation at a point needs --t or --lambda".into(),
        ));
    };
    let time =
        parse_rational(t).ok_or_else(|| Error::Invalid(format!("cannot parse time `{t}`")))?;
    let img = flow_evaluate_coords(&fexpr, &time, point.coords(), bits)?;
    let mut body = Vec::new();
    for (x, c) in names.iter().zip(&img.coords) {
        if img.exact {
            body.push(format!("{x} = {c}"));
        } else {
            body.push(format!("{x} = {} (exact dyadic {c})", decimal_string(c, 12)));
        }
    }
    body.push(format!(
        "exact: {}; relation residual = {}",
        img.exact,
        decimal_string(&img.residual, 12)
    ));
    Ok(Outcome::new(
        0,
        body.join("\n"),
        json!({
            "coords": rat_strings(&img.coords),
            "exact": img.exact,
            "residual": img.residual.to_string(),
        }),
    ))
}

fn cmd_verify_aut(
    env: &Environment,
    field: &str,
    t: &str,
    form: Option<&str>,
    bound: u32,
) -> Result<Outcome> {
    let f = get_field(env, field)?;
    let time =
        parse_rational(t).ok_or_else(|| Error::Invalid(format!("cannot parse time `{t}`")))?;
    let chart = match form {
        Some(w) => Some(get_form(env, w)?),
        None => None,
    };
    let cert = match lnd_certify(f, bound)? {
        Bounded::Within(c) => c,
        Bounded::Exceeded { bound } => {
            return Ok(Outcome::new(
                2,
                format!("inconclusive: field is not certified nilpotent within bound {bound}"),
                json!({ "automorphism": Value::Null }),
            ))
        }
    };
    let fexpr = flow(f, &IntegrabilityCertificate::Lnd(cert))?;
    let phi = poly_automorphism_at(&fexpr, &time)?;
    let report = verify_automorphism(&phi, chart)?;
    let mut lines = vec![
        format!("relations preserved: {}", report.relations_preserved),
        format!("inverse exact: {}", report.inverse_ok),
    ];
    if let Some(v) = report.volume_ok {
        lines.push(format!(
            "volume factor: {} (unimodular: {v})",
            report.volume_factor.as_deref().unwrap_or("-")
        ));
    }
    if let Some(w) = &report.relation_witness {
        lines.push(format!("relation witness: {w}"));
    }
    if let Some(w) = &report.inverse_witness {
        lines.push(format!("inverse witness: {w}"));
    }
    let ok = report.all_ok();
    lines.insert(
        0,
        if ok {
            format!("automorphism verified at t = {time}")
        } else {
            format!("automorphism check FAILED at t = {time}")
        },
    );
    Ok(Outcome::new(
        if ok { 0 } else { 1 },
        lines.join("\n"),
        json!({
            "automorphism": ok,
            "relations-preserved": report.relations_preserved,
            "inverse-ok": report.inverse_ok,
            "volume-ok": report.volume_ok,
            "volume-factor": report.volume_factor,
        }),
    ))
}

fn cmd_span(
    env: &Environment,
    fields: &[String],
    at: &str,
    dimension: Option<usize>,
) -> Result<Outcome> {
    let vs: Vec<VectorField> = fields
        .iter()
        .map(|f| get_field(env, f).cloned())
        .collect::<Result<_>>()?;
    let Some(first) = vs.first() else {
        return Err(Error::Invalid("at least one field required".into()));
    };
    let point = resolve_point(env, first.ring(), at)?;
    let report = span_at_point(&vs, &point)?;
    let ok = match dimension {
        Some(d) => report.field_rank == d,
        None => report.spans,
    };
    let text = format!(
        "field rank {} of tangent dimension {} at the point; spans: {}",
        report.field_rank, report.tangent_dim, report.spans
    );
    Ok(Outcome::new(
        if ok { 0 } else { 1 },
        text,
        json!({
            "field-rank": report.field_rank,
            "tangent-dimension": report.tangent_dim,
            "jacobian-rank": report.jacobian_rank,
            "spans": report.spans,
        }),
    ))
}

fn cmd_unit_cert(
    env: &Environment,
    gens: &[String],
    variety: &str,
    max_degree: u32,
) -> Result<Outcome> {
    let ring = get_variety(env, variety)?;
    let parsed = gens
        .iter()
        .map(|g| parse_polynomial(ring.vars(), g))
        .collect::<Result<Vec<_>>>()?;
    match unit_ideal_certificate(&parsed, max_degree)? {
        Some(cert) => {
            let mut lines = vec![format!(
                "unit ideal certified at cofactor degree {}",
                cert.degree
            )];
            for (c, g) in cert.cofactors.iter().zip(gens) {
                lines.push(format!("({c}) * ({g})"));
            }
            Ok(Outcome::new(
                0,
                lines.join("\n"),
                json!({
                    "degree": cert.degree,
                    "cofactors": cert.cofactors.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                }),
            ))
        }
        None => Ok(Outcome::new(
            2,
            format!("inconclusive: no certificate up to cofactor degree {max_degree}"),
            json!({ "degree": Value::Null, "searched-to": max_degree }),
        )),
    }
}

fn cmd_compat(
    env: &Environment,
    sigma: &str,
    delta: &str,
    witness: &str,
    bound: u32,
) -> Result<Outcome> {
    let s = get_field(env, sigma)?;
    let d = get_field(env, delta)?;
    let a = RingElement::new(s.ring(), parse_polynomial(s.ring().vars(), witness)?);
    let s_cert = match lnd_certify(s, bound)? {
        Bounded::Within(c) => c,
        Bounded::Exceeded { bound } => {
            return Ok(Outcome::new(
                2,
                format!("inconclusive: sigma not certified nilpotent within bound {bound}"),
                json!({ "holds": Value::Null }),
            ))
        }
    };
    let d_cert = match lnd_certify(d, bound)? {
        Bounded::Within(c) => SecondCertificate::Lnd(c),
        Bounded::Exceeded { .. } => match diagonal_semisimple_certify(d) {
            Some(eigen) => SecondCertificate::DiagonalSemisimple(eigen),
            None => {
                return Ok(Outcome::new(
                    2,
                    "inconclusive: delta is neither certified nilpotent nor diagonal semisimple"
                        .to_string(),
                    json!({ "holds": Value::Null }),
                ))
            }
        },
    };
    let report = compatibility_check(s, &s_cert, d, &d_cert, &a)?;
    let text = format!(
        "mode {}: kernel-shift {}, degree-one {} => compatible: {}",
        report.mode, report.condition_kernel_shift, report.condition_degree_one, report.holds
    );
    Ok(Outcome::new(
        if report.holds { 0 } else { 1 },
        text,
        json!({
            "mode": report.mode,
            "kernel-shift": report.condition_kernel_shift,
            "degree-one": report.condition_degree_one,
            "sigma-degree": report.sigma_degree,
            "delta-degree": report.delta_degree,
            "holds": report.holds,
        }),
    ))
}

fn cmd_closure(
    env: &Environment,
    gens: &[String],
    targets: &[String],
    form: Option<&str>,
    max_degree: u32,
    depth: u32,
) -> Result<Outcome> {
    let vs: Vec<VectorField> = gens
        .iter()
        .map(|g| get_field(env, g).cloned())
        .collect::<Result<_>>()?;
    let chart = match form {
        Some(w) => Some(get_form(env, w)?),
        None => None,
    };
    let basis = closure_span(&vs, max_degree, depth)?;
    let mut lines = vec![format!(
        "closure basis rank {} (degree bound {}, depth bound {})",
        basis.rank(),
        max_degree,
        depth
    )];
    let mut items = Vec::new();
    let mut code = 0u8;
    for name in targets {
        let target = get_field(env, name)?;
        let (line, verdict, detail) = match closure_member(&basis, target, chart)? {
            Membership::Member { coordinates } => {
                let nonzero = coordinates.iter().filter(|c| !c.is_zero()).count();
                (
                    format!("{name}: member ({nonzero} nonzero coordinates)"),
                    "member",
                    Value::Null,
                )
            }
            Membership::NotInSpan { obstruction } => {
                code = 1;
                let detail = obstruction.clone();
                (
                    match &obstruction {
                        Some(o) => format!("{name}: not in span; {o}"),
                        None => format!("{name}: not in the bounded span"),
                    },
                    "not-in-span",
                    detail.map(Value::String).unwrap_or(Value::Null),
                )
            }
            Membership::DegreeExceedsBound { degree, bound } => {
                if code == 0 {
                    code = 2;
                }
                (
                    format!("{name}: coefficient degree {degree} exceeds bound {bound}"),
                    "degree-exceeds-bound",
                    json!({ "degree": degree, "bound": bound }),
                )
            }
        };
        lines.push(line);
        items.push(json!({ "target": name, "verdict": verdict, "detail": detail }));
    }
    Ok(Outcome::new(
        code,
        lines.join("\n"),
        json!({ "rank": basis.rank(), "targets": items }),
    ))
}

#[allow(clippy::too_many_arguments)]
fn cmd_transit(
    env: &Environment,
    fields: &[String],
    integrals: &[String],
    points: &[String],
    target: &str,
    tol: &Rational,
    bits: u32,
    max_iter: usize,
    perturb: bool,
) -> Result<Outcome> {
    let mut pairs = Vec::new();
    for (f, expr) in fields.iter().zip(integrals) {
        let v = get_field(env, f)?.clone();
        let integral = RingElement::new(v.ring(), parse_polynomial(v.ring().vars(), expr)?);
        pairs.push((v, integral));
    }
    let Some(ring) = pairs.first().map(|(v, _)| v.ring().clone()) else {
        return Err(Error::Invalid("at least one pair required".into()));
    };
    let mut pts = points
        .iter()
        .map(|p| resolve_point(env, &ring, p))
        .collect::<Result<Vec<_>>>()?;
    let target = parse_coord_list(target)?;

    let mut lines = Vec::new();
    let mut perturbation = Value::Null;
    if perturb {
        let (new_pts, record) = perturb_to_separated(&pairs, &pts)?;
        if let Some(r) = record {
            lines.push(format!(
                "perturbed point {} along pair {} with parameter {}",
                r.moved_point, r.pair_index, r.parameter
            ));
            perturbation = json!({
                "moved-point": r.moved_point,
                "pair": r.pair_index,
                "parameter": r.parameter.to_string(),
            });
        }
        pts = new_pts;
    }

    let plan = build_transitivity_plan(&pairs, &pts, &target, tol, bits, max_iter)?;
    lines.push(format!(
        "plan with {} stages after {} iterations",
        plan.stages.len(),
        plan.iterations
    ));
    for (i, stage) in plan.stages.iter().enumerate() {
        lines.push(format!(
            "stage {}: multiplier {}, time {}",
            i + 1,
            stage.multiplier,
            decimal_string(&stage.time, 12)
        ));
    }
    lines.push(format!(
        "target error {} (tolerance {}), surface residual {}",
        decimal_string(&plan.target_error, 12),
        decimal_string(tol, 12),
        decimal_string(&plan.max_residual, 12)
    ));
    let stages_json: Vec<Value> = plan
        .stages
        .iter()
        .map(|s| {
            json!({
                "multiplier": s.multiplier.to_string(),
                "time": s.time.to_string(),
            })
        })
        .collect();
    Ok(Outcome::new(
        0,
        lines.join("\n"),
        json!({
            "stages": stages_json,
            "iterations": plan.iterations,
            "achieved": rat_strings(&plan.achieved),
            "target-error": plan.target_error.to_string(),
            "max-residual": plan.max_residual.to_string(),
            "perturbation": perturbation,
        }),
    ))
}

/// Matches `pat` against `text` with `*` (any run) and `?` (any one char).
fn glob_match(pat: &str, text: &str) -> bool {
    let p: Vec<char> = pat.chars().collect();
    let t: Vec<char> = text.chars().collect();
    let (mut pi, mut ti) = (0usize, 0usize);
    let mut star: Option<usize> = None;
    let mut mark = 0usize;
    while ti < t.len() {
        if pi < p.len() && (p[pi] == '?' || p[pi] == t[ti]) {
            pi += 1;
            ti += 1;
        } else if pi < p.len() && p[pi] == '*' {
            star = Some(pi);
            mark = ti;
            pi += 1;
        } else if let Some(s) = star {
            pi = s + 1;
            mark += 1;
            ti = mark;
        } else {
            return false;
        }
    }
    while pi < p.len() && p[pi] == '*' {
        pi += 1;
    }
    pi == p.len()
}

fn expectation_str(e: &avf_core::files::Expectation) -> &'static str {
    use avf_core::files::Expectation::*;
    match e {
        Pass => "pass",
        Fail => "fail",
        Inconclusive => "inconclusive",
    }
}

fn cmd_verify(
    dir: &Path,
    filter: Option<&str>,
    jobs: Option<usize>,
    cfg: RunConfig,
) -> Result<Outcome> {
    use rayon::prelude::*;
    let started = std::time::Instant::now();
    let (env, mut checks) = load_dir(dir)?;
    if let Some(pat) = filter {
        checks.retain(|c| glob_match(pat, &c.id));
    }
    let run = || -> Result<Vec<_>> {
        checks
            .par_iter()
            .map(|c| run_check(&env, c, &cfg))
            .collect()
    };
    let mut outcomes = match jobs {
        Some(0) => return Err(Error::Invalid("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Invalid(format!("worker pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    outcomes.sort_by(|a, b| a.id.cmp(&b.id));
    let report = CorpusReport { outcomes };
    let code = report.exit_code();

    let width = report
        .outcomes
        .iter()
        .map(|o| o.id.len())
        .max()
        .unwrap_or(0);
    let mut lines = Vec::new();
    for o in &report.outcomes {
        let marker = if o.matched { "  ok  " } else { " MISS " };
        let mut line = format!(
            "[{marker}] {:width$}  {} (expect {})",
            o.id,
            o.verdict,
            expectation_str(&o.expect)
        );
        if !o.matched && !o.detail.is_empty() {
            line.push_str(&format!("  {}", o.detail));
        }
        lines.push(line);
    }
    lines.push(format!(
        "checks: {}  matched: {}  exit: {}",
        report.total(),
        report.matched(),
        code
    ));
    eprintln!("elapsed: {:.2}s", started.elapsed().as_secs_f64());
    Ok(Outcome::new(
        u8::try_from(code).unwrap_or(3),
        lines.join("\n"),
        json!({
            "checks": report.total(),
            "matched": report.matched(),
            "exit": code,
            "items": report.outcomes,
        }),
    ))
}
