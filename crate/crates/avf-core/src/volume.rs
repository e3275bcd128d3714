//! Chart volume forms and exact divergence.
//!
//! A chart picks a subset of the ambient variables as coordinates and
//! expresses the remaining ones as rational functions of them; the volume
//! form is u * du_1 ^ ... ^ du_d for a nonzero rational-function unit u.
//! Construction verifies that the substitutions annihilate every relation,
//! so identities that hold modulo the ideal become literal rational-function
//! identities in chart coordinates. Divergence and its algebraic identities
//! are therefore decided by exact arithmetic, no sampling involved.

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::ratfunc::RationalFunction;
use crate::variety::{require_same_ring, Ring};
use crate::derivation::{bracket, VectorField};
use crate::vars::{varset, VarSet};
use std::fmt;
use std::sync::Arc;

#[derive(Debug)]
pub struct VolumeChart {
    ring: Ring,
    chart_idx: Vec<usize>,
    chart_vars: VarSet,
    /// Ambient variable i maps to images[i] over the chart varset.
    images: Vec<RationalFunction>,
    unit: RationalFunction,
    pub domain_note: Option<String>,
}

pub type ChartRef = Arc<VolumeChart>;

impl VolumeChart {
    /// `subs` maps every non-chart ambient variable to its expression in the
    /// chart variables. Substituting into each relation must give exactly 0.
    pub fn new(
        ring: &Ring,
        chart_var_names: &[&str],
        subs: &[(&str, RationalFunction)],
        unit: RationalFunction,
        domain_note: Option<String>,
    ) -> Result<ChartRef> {
        let chart_vars = varset(chart_var_names)?;
        if unit.is_zero() {
            return Err(Error::Invalid("chart unit must be nonzero".into()));
        }
        let mut chart_idx = Vec::new();
        for name in chart_var_names {
            match ring.vars().index(name) {
                Some(i) => chart_idx.push(i),
                None => {
                    return Err(Error::Invalid(format!(
                        "chart variable `{name}` is not a variable of {ring}"
                    )))
                }
            }
        }
        let mut images: Vec<Option<RationalFunction>> = vec![None; ring.vars().len()];
        for (k, &i) in chart_idx.iter().enumerate() {
            images[i] = Some(RationalFunction::variable(&chart_vars, k));
        }
        for (name, rf) in subs {
            let i = ring.vars().index(name).ok_or_else(|| {
                Error::Invalid(format!("substituted `{name}` is not a variable of {ring}"))
            })?;
            if images[i].is_some() {
                return Err(Error::Invalid(format!(
                    "variable `{name}` is both chart coordinate and substituted"
                )));
            }
            images[i] = Some(rf.clone());
        }
        let images: Vec<RationalFunction> = images
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| {
                    Error::Invalid(format!(
                        "variable `{}` neither chart coordinate nor substituted",
                        ring.vars().name(i)
                    ))
                })
            })
            .collect::<Result<_>>()?;
        for rel in ring.relations() {
            let s = rel.subst_rf(&images);
            if !s.is_zero() {
                return Err(Error::ChartInvalid {
                    relation: rel.to_string(),
                });
            }
        }
        Ok(Arc::new(VolumeChart {
            ring: ring.clone(),
            chart_idx,
            chart_vars,
            images,
            unit,
            domain_note,
        }))
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn chart_vars(&self) -> &VarSet {
        &self.chart_vars
    }

    pub fn chart_indices(&self) -> &[usize] {
        &self.chart_idx
    }

    pub fn unit(&self) -> &RationalFunction {
        &self.unit
    }

    pub fn dim(&self) -> usize {
        self.chart_idx.len()
    }

    pub fn images(&self) -> &[RationalFunction] {
        &self.images
    }

    /// Pushes an ambient polynomial down to the chart.
    pub fn to_chart(&self, p: &Polynomial) -> RationalFunction {
        p.subst_rf(&self.images)
    }

    /// Ambient coordinates of a chart point; errors where a substitution
    /// denominator vanishes.
    pub fn lift(&self, chart_point: &[crate::Rational]) -> Result<Vec<crate::Rational>> {
        assert_eq!(chart_point.len(), self.dim());
        self.images.iter().map(|rf| rf.eval(chart_point)).collect()
    }

    /// Same chart with the volume unit multiplied by a nonzero factor.
    pub fn rescaled(&self, factor: &RationalFunction) -> Result<ChartRef> {
        if factor.is_zero() {
            return Err(Error::Invalid("volume rescaling factor must be nonzero".into()));
        }
        Ok(Arc::new(VolumeChart {
            ring: self.ring.clone(),
            chart_idx: self.chart_idx.clone(),
            chart_vars: self.chart_vars.clone(),
            images: self.images.clone(),
            unit: &self.unit * factor,
            domain_note: self.domain_note.clone(),
        }))
    }
}

impl fmt::Display for VolumeChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d: Vec<String> = (0..self.dim())
            .map(|k| format!("d{}", self.chart_vars.name(k)))
            .collect();
        write!(f, "({})*{}", self.unit, d.join("^"))
    }
}

/// Vector field written in chart coordinates.
#[derive(Debug, Clone)]
pub struct ChartField {
    chart: ChartRef,
    coeffs: Vec<RationalFunction>,
}

impl ChartField {
    pub fn new(chart: &ChartRef, coeffs: Vec<RationalFunction>) -> Self {
        assert_eq!(coeffs.len(), chart.dim());
        ChartField {
            chart: chart.clone(),
            coeffs,
        }
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn coeffs(&self) -> &[RationalFunction] {
        &self.coeffs
    }

    /// Action on a chart function: sum of coeff_i * dg/du_i.
    pub fn apply(&self, g: &RationalFunction) -> RationalFunction {
        let mut acc = RationalFunction::zero(self.chart.chart_vars());
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                acc = &acc + &(c * &g.partial(i));
            }
        }
        acc
    }

    pub fn scale_rf(&self, f: &RationalFunction) -> ChartField {
        ChartField {
            chart: self.chart.clone(),
            coeffs: self.coeffs.iter().map(|c| c * f).collect(),
        }
    }
}

/// Writes an ambient tangent field in chart coordinates and certifies
/// consistency: for every substituted variable s with image S(u), the pushed
/// ambient s-coefficient must equal sum_i dS/du_i * (pushed u_i-coefficient)
/// as an exact rational-function identity.
pub fn restrict_to_chart(v: &VectorField, chart: &ChartRef) -> Result<ChartField> {
    require_same_ring(v.ring(), chart.ring())?;
    let coeffs: Vec<RationalFunction> = chart
        .chart_idx
        .iter()
        .map(|&i| chart.to_chart(v.coeffs()[i].rep()))
        .collect();
    for (i, image) in chart.images.iter().enumerate() {
        if chart.chart_idx.contains(&i) {
            continue;
        }
        let pushed = chart.to_chart(v.coeffs()[i].rep());
        let mut chain = RationalFunction::zero(chart.chart_vars());
        for (k, c) in coeffs.iter().enumerate() {
            if !c.is_zero() {
                chain = &chain + &(&image.partial(k) * c);
            }
        }
        if pushed != chain {
            return Err(Error::ChartInconsistent {
                var: chart.ring.vars().name(i).to_string(),
            });
        }
    }
    Ok(ChartField {
        chart: chart.clone(),
        coeffs,
    })
}

/// div(f) = sum_i df_i/du_i + f(u)/u for the chart unit u.
pub fn divergence(f: &ChartField) -> RationalFunction {
    let chart = f.chart();
    let mut acc = RationalFunction::zero(chart.chart_vars());
    for (i, c) in f.coeffs().iter().enumerate() {
        acc = &acc + &c.partial(i);
    }
    let vu = f.apply(chart.unit());
    if !vu.is_zero() {
        acc = &acc + &vu.div(chart.unit()).expect("chart unit is nonzero");
    }
    acc
}

#[derive(Debug, Clone)]
pub struct DivergenceIdentities {
    /// div(f v) = f div(v) + v(f)
    pub product_rule: bool,
    /// div([v, w]) = v(div w) - w(div v)
    pub bracket_rule: bool,
    /// div_{f omega}(v) = div_omega(v) + v(f)/f
    pub rescale_rule: bool,
}

impl DivergenceIdentities {
    pub fn all_hold(&self) -> bool {
        self.product_rule && self.bracket_rule && self.rescale_rule
    }
}

/// Checks the three divergence identities exactly for tangent fields v, w and
/// a nonzero chart function f.
pub fn check_divergence_identities(
    v: &VectorField,
    w: &VectorField,
    f: &RationalFunction,
    chart: &ChartRef,
) -> Result<DivergenceIdentities> {
    if f.is_zero() {
        return Err(Error::Invalid("scalar f must be nonzero".into()));
    }
    let cv = restrict_to_chart(v, chart)?;
    let cw = restrict_to_chart(w, chart)?;
    let div_v = divergence(&cv);
    let div_w = divergence(&cw);

    let scaled = cv.scale_rf(f);
    let product_rule = divergence(&scaled) == &(&div_v * f) + &cv.apply(f);

    let br = bracket(v, w)?;
    let cbr = restrict_to_chart(&br, chart)?;
    let bracket_rule = divergence(&cbr) == &cv.apply(&div_w) - &cw.apply(&div_v);

    let rescaled = chart.rescaled(f)?;
    let cv_rescaled = restrict_to_chart(v, &rescaled)?;
    let rescale_rule =
        divergence(&cv_rescaled) == &div_v + &cv.apply(f).div(f).expect("f is nonzero");

    Ok(DivergenceIdentities {
        product_rule,
        bracket_rule,
        rescale_rule,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_expression, parse_polynomial};
    use crate::variety::CoordinateRing;

    fn s_ring() -> Ring {
        let vs = varset(&["x", "y", "z"]).unwrap();
        let rel = parse_polynomial(&vs, "x+y+x*y*z-1").unwrap();
        CoordinateRing::new("S", &vs, vec![rel]).unwrap()
    }

    fn torus_chart(r: &Ring) -> ChartRef {
        let cv = varset(&["x", "y"]).unwrap();
        let z = parse_expression(&cv, "(1-x-y)/(x*y)").unwrap();
        let unit = parse_expression(&cv, "1/(x*y)").unwrap();
        VolumeChart::new(r, &["x", "y"], &[("z", z)], unit, None).unwrap()
    }

    fn field(r: &Ring, cs: [&str; 3]) -> VectorField {
        VectorField::new(
            r,
            cs.iter()
                .map(|s| parse_polynomial(r.vars(), s).unwrap())
                .collect(),
        )
    }

    #[test]
    fn chart_construction_checks_relations() {
        let r = s_ring();
        let cv = varset(&["x", "y"]).unwrap();
        let bad = parse_expression(&cv, "(1-x-y)/x").unwrap();
        let unit = parse_expression(&cv, "1/(x*y)").unwrap();
        let err = VolumeChart::new(&r, &["x", "y"], &[("z", bad)], unit, None);
        assert!(matches!(err, Err(Error::ChartInvalid { .. })));
        torus_chart(&r); // valid one constructs
    }

    #[test]
    fn substitution_identities_from_the_relation() {
        // on the chart, 1 + xz = (1-x)/y and 1 + yz = (1-y)/x
        let r = s_ring();
        let c = torus_chart(&r);
        let cv = c.chart_vars().clone();
        let lhs = c.to_chart(&parse_polynomial(r.vars(), "1+x*z").unwrap());
        assert_eq!(lhs, parse_expression(&cv, "(1-x)/y").unwrap());
        let lhs2 = c.to_chart(&parse_polynomial(r.vars(), "1+y*z").unwrap());
        assert_eq!(lhs2, parse_expression(&cv, "(1-y)/x").unwrap());
    }

    #[test]
    fn restriction_is_consistent_and_divergence_free() {
        let r = s_ring();
        let c = torus_chart(&r);
        let nu1 = field(&r, ["1+x*z", "-(1+y*z)", "0"]);
        let cf = restrict_to_chart(&nu1, &c).unwrap();
        let cv = c.chart_vars().clone();
        assert_eq!(cf.coeffs()[0], parse_expression(&cv, "(1-x)/y").unwrap());
        assert_eq!(cf.coeffs()[1], parse_expression(&cv, "-(1-y)/x").unwrap());
        assert!(divergence(&cf).is_zero());
    }

    #[test]
    fn sigma_fields_are_divergence_free() {
        let r = s_ring();
        let c = torus_chart(&r);
        for cs in [["x*y", "0", "-(1+y*z)"], ["0", "x*y", "-(1+x*z)"]] {
            let f = field(&r, cs);
            let cf = restrict_to_chart(&f, &c).unwrap();
            assert!(divergence(&cf).is_zero(), "{cs:?}");
        }
    }

    #[test]
    fn inconsistent_field_is_rejected() {
        // drop the z-coefficient of sigma2: chain rule no longer matches
        let r = s_ring();
        let c = torus_chart(&r);
        let broken = field(&r, ["x*y", "0", "0"]);
        let err = restrict_to_chart(&broken, &c);
        assert!(matches!(err, Err(Error::ChartInconsistent { var }) if var == "z"));
    }

    #[test]
    fn weighted_diagonal_field_standard_divergence_cancels() {
        // l x d/dx - k y d/dy has chart divergence (l - k) + (k - l) = 0
        let r = s_ring();
        let c = torus_chart(&r);
        let cv = c.chart_vars().clone();
        for (k, l) in [(1i64, 0i64), (0, 1), (1, 1), (2, 1)] {
            let fx = parse_expression(&cv, &format!("{l}*x")).unwrap();
            let fy = parse_expression(&cv, &format!("-{k}*y")).unwrap();
            let cf = ChartField::new(&c, vec![fx, fy]);
            assert!(divergence(&cf).is_zero(), "(k,l)=({k},{l})");
        }
    }

    #[test]
    fn x_scaled_field_has_unit_divergence() {
        // div(x * nu1) = 1 + xz, whose chart form is (1-x)/y
        let r = s_ring();
        let c = torus_chart(&r);
        let scaled = field(&r, ["x*(1+x*z)", "-x*(1+y*z)", "0"]);
        let cf = restrict_to_chart(&scaled, &c).unwrap();
        let expect = parse_expression(c.chart_vars(), "(1-x)/y").unwrap();
        assert_eq!(divergence(&cf), expect);
    }

    #[test]
    fn divergence_identities_hold() {
        let r = s_ring();
        let c = torus_chart(&r);
        let v = field(&r, ["x*y", "0", "-(1+y*z)"]);
        let w = field(&r, ["0", "x*y", "-(1+x*z)"]);
        let f = parse_expression(c.chart_vars(), "x^2 - y + 1").unwrap();
        let rep = check_divergence_identities(&v, &w, &f, &c).unwrap();
        assert!(rep.product_rule);
        assert!(rep.bracket_rule);
        assert!(rep.rescale_rule);
    }
}
