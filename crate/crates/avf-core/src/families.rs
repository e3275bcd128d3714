//! Named varieties and field families used throughout the test corpus.
//!
//! Construction here is strict: every field constructor runs the tangency
//! check and refuses coefficients that do not preserve the relation ideal.
//! Raw `VectorField::new` stays available for studying non-tangent
//! candidates.

use crate::derivation::{tangency_check, VectorField};
use crate::error::{Error, Result};
use crate::parse::{parse_expression, parse_polynomial};
use crate::poly::Polynomial;
use crate::variety::{CoordinateRing, Ring};
use crate::vars::varset;
use crate::volume::{ChartRef, VolumeChart};
use std::fmt;

/// Free polynomial ring, the coordinate ring of affine space.
pub fn affine_space(name: &str, vars: &[&str]) -> Result<Ring> {
    CoordinateRing::new(name, &varset(vars)?, vec![])
}

/// The smooth affine surface x + y + xyz = 1 in coordinates x, y, z.
pub fn surface_s() -> Ring {
    let vs = varset(&["x", "y", "z"]).expect("fixed names");
    let rel = parse_polynomial(&vs, "x+y+x*y*z-1").expect("fixed relation");
    CoordinateRing::new("S", &vs, vec![rel]).expect("principal ideal")
}

/// SL2 as the hypersurface a1*b2 - a2*b1 = 1.
pub fn sl2_ring() -> Ring {
    let vs = varset(&["a1", "a2", "b1", "b2"]).expect("fixed names");
    let rel = parse_polynomial(&vs, "a1*b2-a2*b1-1").expect("fixed relation");
    CoordinateRing::new("SL2", &vs, vec![rel]).expect("principal ideal")
}

/// Torus chart of the surface: coordinates (x, y) with
/// z = (1-x-y)/(xy) and volume unit 1/(xy), so omega = dx/x ^ dy/y.
pub fn s_torus_chart(ring: &Ring) -> Result<ChartRef> {
    let cv = varset(&["x", "y"])?;
    VolumeChart::new(
        ring,
        &["x", "y"],
        &[("z", parse_expression(&cv, "(1-x-y)/(x*y)")?)],
        parse_expression(&cv, "1/(x*y)")?,
        Some(
            "valid off the lines x = 0 and y = 0, where the unit and the \
             z-substitution degenerate"
                .to_string(),
        ),
    )
}

fn checked_field(ring: &Ring, coeffs: Vec<Polynomial>) -> Result<VectorField> {
    let v = VectorField::new(ring, coeffs);
    match tangency_check(&v) {
        t if t.is_tangent() => Ok(v),
        _ => Err(Error::Invalid(format!(
            "field {v} does not preserve the relation ideal"
        ))),
    }
}

fn parsed_field(ring: &Ring, coeffs: &[&str]) -> Result<VectorField> {
    checked_field(
        ring,
        coeffs
            .iter()
            .map(|s| parse_polynomial(ring.vars(), s))
            .collect::<Result<_>>()?,
    )
}

/// q(z)((1+xz) d/dx - (1+yz) d/dy); z is a first integral for every q.
pub fn s_type1_field(ring: &Ring, q: &Polynomial) -> Result<VectorField> {
    let vs = ring.vars();
    let fx = parse_polynomial(vs, "1+x*z")?;
    let fy = parse_polynomial(vs, "-(1+y*z)")?;
    checked_field(ring, vec![q * &fx, q * &fy, Polynomial::zero(vs)])
}

/// Tangent lift of ptilde * P * (l x d/dx - k y d/dy) with P = x^k y^l,
/// where ptilde is a polynomial in the first integral P (in the boundary
/// cases k = 0 or l = 0, in y alone resp. x alone). The P factor is what
/// makes the z-coefficient polynomial.
pub fn s_type2_field(ring: &Ring, k: u32, l: u32, ptilde: &Polynomial) -> Result<VectorField> {
    let vs = ring.vars();
    match (k, l) {
        (0, 0) => Err(Error::Invalid("weights (0,0) give the zero field".into())),
        (0, 1) => {
            let fx = &parse_polynomial(vs, "x*y")? * ptilde;
            let fz = &parse_polynomial(vs, "-(1+y*z)")? * ptilde;
            checked_field(ring, vec![fx, Polynomial::zero(vs), fz])
        }
        (1, 0) => {
            let fy = &parse_polynomial(vs, "x*y")? * ptilde;
            let fz = &parse_polynomial(vs, "-(1+x*z)")? * ptilde;
            checked_field(ring, vec![Polynomial::zero(vs), fy, fz])
        }
        (0, _) | (_, 0) => Err(Error::Invalid(
            "weights with a zero entry are only lifted for (0,1) and (1,0)".into(),
        )),
        _ => {
            let p_mon = parse_polynomial(vs, &format!("x^{k}*y^{l}"))?;
            let fx = &(&p_mon * ptilde) * &parse_polynomial(vs, &format!("{l}*x"))?;
            let fy = &(&p_mon * ptilde) * &parse_polynomial(vs, &format!("-{k}*y"))?;
            let tail = parse_polynomial(
                vs,
                &format!("x^{}*y^{}*({l}*(y-1) - {k}*(x-1))", k - 1, l - 1),
            )?;
            checked_field(ring, vec![fx, fy, &tail * ptilde])
        }
    }
}

/// nu1 = (1+xz) d/dx - (1+yz) d/dy, the q = 1 member of the first family.
pub fn s_nu1(ring: &Ring) -> Result<VectorField> {
    parsed_field(ring, &["1+x*z", "-(1+y*z)", "0"])
}

/// sigma2 = xy d/dx - (1+yz) d/dz; y is a first integral.
pub fn s_sigma2(ring: &Ring) -> Result<VectorField> {
    parsed_field(ring, &["x*y", "0", "-(1+y*z)"])
}

/// sigma3 = xy d/dy - (1+xz) d/dz; x is a first integral.
pub fn s_sigma3(ring: &Ring) -> Result<VectorField> {
    parsed_field(ring, &["0", "x*y", "-(1+x*z)"])
}

/// The non-tangent variant xy d/dx - (1+xz) d/dz, kept for its failure
/// witness; returns raw coefficients since the checked constructor rejects it.
pub fn s_printed_third_field_coeffs(ring: &Ring) -> Vec<Polynomial> {
    ["x*y", "0", "-(1+x*z)"]
        .iter()
        .map(|s| parse_polynomial(ring.vars(), s).expect("fixed coefficients"))
        .collect()
}

/// delta1 = a1 d/db1 + a2 d/db2 on SL2.
pub fn sl2_delta1(ring: &Ring) -> Result<VectorField> {
    parsed_field(ring, &["0", "0", "a1", "a2"])
}

/// delta2 = b1 d/da1 + b2 d/da2 on SL2.
pub fn sl2_delta2(ring: &Ring) -> Result<VectorField> {
    parsed_field(ring, &["b1", "b2", "0", "0"])
}

/// A parametrized line on a variety together with the function cutting it out.
#[derive(Debug, Clone)]
pub struct Line {
    pub name: String,
    /// Coordinate functions of the parametrization, polynomials in t.
    pub param: Vec<Polynomial>,
    /// Ambient function vanishing on the line.
    pub defining: Polynomial,
}

#[derive(Debug, Clone)]
pub struct LineReport {
    pub name: String,
    /// Residual of each relation composed with the parametrization.
    pub relation_residuals: Vec<Polynomial>,
    /// Residual of the defining function composed with the parametrization.
    pub defining_residual: Polynomial,
}

impl LineReport {
    pub fn passes(&self) -> bool {
        self.relation_residuals.iter().all(Polynomial::is_zero)
            && self.defining_residual.is_zero()
    }
}

impl fmt::Display for LineReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passes() {
            write!(f, "{}: on variety, defining function vanishes", self.name)
        } else {
            write!(
                f,
                "{}: relation residuals [{}], defining residual {}",
                self.name,
                self.relation_residuals
                    .iter()
                    .map(|p| p.to_string())
                    .collect::<Vec<_>>()
                    .join(", "),
                self.defining_residual
            )
        }
    }
}

/// Substitutes the parametrization into every relation and into the defining
/// function; both must vanish identically in t.
pub fn verify_line(ring: &Ring, line: &Line) -> Result<LineReport> {
    if line.param.len() != ring.vars().len() {
        return Err(Error::Invalid(format!(
            "parametrization has {} coordinates, {} needs {}",
            line.param.len(),
            ring,
            ring.vars().len()
        )));
    }
    let relation_residuals = ring
        .relations()
        .iter()
        .map(|rel| rel.subst(&line.param))
        .collect();
    let defining_residual = line.defining.subst(&line.param);
    Ok(LineReport {
        name: line.name.clone(),
        relation_residuals,
        defining_residual,
    })
}

/// The five lines of the surface with their defining functions
/// x, yz+1, y, xz+1, z.
pub fn s_lines(ring: &Ring) -> Result<Vec<Line>> {
    let tv = varset(&["t"])?;
    let vs = ring.vars();
    let data: [(&str, [&str; 3], &str); 5] = [
        ("L1", ["0", "1", "t"], "x"),
        ("L2", ["t", "1", "-1"], "y*z+1"),
        ("L3", ["1", "0", "t"], "y"),
        ("L4", ["1", "t", "-1"], "x*z+1"),
        ("L5", ["t", "1-t", "0"], "z"),
    ];
    data.iter()
        .map(|(name, param, def)| {
            Ok(Line {
                name: name.to_string(),
                param: param
                    .iter()
                    .map(|s| parse_polynomial(&tv, s))
                    .collect::<Result<_>>()?,
                defining: parse_polynomial(vs, def)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivation::Tangency;
    use crate::variety::RingElement;

    #[test]
    fn standard_rings_and_fields_construct() {
        let s = surface_s();
        s_nu1(&s).unwrap();
        s_sigma2(&s).unwrap();
        s_sigma3(&s).unwrap();
        let sl2 = sl2_ring();
        sl2_delta1(&sl2).unwrap();
        sl2_delta2(&sl2).unwrap();
        s_torus_chart(&s).unwrap();
    }

    #[test]
    fn printed_third_field_is_rejected_by_the_checked_constructor() {
        let s = surface_s();
        let coeffs = s_printed_third_field_coeffs(&s);
        assert!(checked_field(&s, coeffs.clone()).is_err());
        let raw = VectorField::new(&s, coeffs);
        let Tangency::NotTangent { residuals } = tangency_check(&raw) else {
            panic!("expected tangency failure")
        };
        let witness = parse_polynomial(s.vars(), "x*y*z*(y-x)").unwrap();
        assert_eq!(residuals[0], s.normal_form(&witness));
    }

    #[test]
    fn type1_family_members_are_tangent_with_integral_z() {
        let s = surface_s();
        let z = RingElement::variable(&s, 2);
        for qs in ["1", "z", "z^2", "z^3"] {
            let q = parse_polynomial(s.vars(), qs).unwrap();
            let f = s_type1_field(&s, &q).unwrap();
            assert!(f.apply(&z).unwrap().is_zero(), "q = {qs}");
        }
    }

    #[test]
    fn type2_family_members_are_tangent_with_integral_p() {
        let s = surface_s();
        for (k, l) in [(0u32, 1u32), (1, 0), (1, 1), (2, 1)] {
            let p_mon = if (k, l) == (0, 1) {
                "y".to_string()
            } else if (k, l) == (1, 0) {
                "x".to_string()
            } else {
                format!("x^{k}*y^{l}")
            };
            let p_el = RingElement::new(&s, parse_polynomial(s.vars(), &p_mon).unwrap());
            for e in 0..=3u32 {
                let ptilde = parse_polynomial(s.vars(), &p_mon).unwrap().pow(e);
                let f = s_type2_field(&s, k, l, &ptilde).unwrap();
                assert!(
                    f.apply(&p_el).unwrap().is_zero(),
                    "(k,l)=({k},{l}), ptilde power {e}"
                );
            }
        }
    }

    #[test]
    fn low_weight_type2_members_recover_the_sigma_fields() {
        let s = surface_s();
        let one = Polynomial::one(s.vars());
        assert_eq!(s_type2_field(&s, 0, 1, &one).unwrap(), s_sigma2(&s).unwrap());
        assert_eq!(s_type2_field(&s, 1, 0, &one).unwrap(), s_sigma3(&s).unwrap());
    }

    #[test]
    fn all_five_lines_verify() {
        let s = surface_s();
        for line in s_lines(&s).unwrap() {
            let rep = verify_line(&s, &line).unwrap();
            assert!(rep.passes(), "{rep}");
        }
    }

    #[test]
    fn perturbed_line_fails_with_named_residual() {
        let s = surface_s();
        let tv = varset(&["t"]).unwrap();
        let bad = Line {
            name: "L2-shifted".to_string(),
            param: ["t", "1", "1"]
                .iter()
                .map(|p| parse_polynomial(&tv, p).unwrap())
                .collect(),
            defining: parse_polynomial(s.vars(), "y*z+1").unwrap(),
        };
        let rep = verify_line(&s, &bad).unwrap();
        assert!(!rep.passes());
        assert_eq!(rep.relation_residuals[0].to_string(), "2*t");
        assert_eq!(rep.defining_residual.to_string(), "2");
    }
}
