//! Error type shared across the library.
//!
//! Inconclusive outcomes (budget exhaustion on an otherwise well-posed
//! question) are not errors; operations that can be inconclusive return a
//! verdict enum instead. `Error` covers malformed input and violated
//! preconditions.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown variable `{name}` at byte {pos}")]
    UnknownVariable { name: String, pos: usize },
    #[error("denominator is the zero polynomial")]
    ZeroDenominator,
    #[error("expression is not a polynomial: denominator {den}")]
    NotPolynomial { den: String },
    #[error("undefined value: zero denominator while evaluating {what}")]
    UndefinedValue { what: String },
    #[error("variable lists differ: [{left}] vs [{right}]")]
    VarlistMismatch { left: String, right: String },
    #[error("elements belong to different rings: {left} vs {right}")]
    RingMismatch { left: String, right: String },
    #[error("point is not on the variety: relation {relation} evaluates to {value}")]
    PointOffVariety { relation: String, value: String },
    #[error("S-pair budget of {budget} exhausted")]
    BudgetExceeded { budget: usize },
    #[error("singular point: Jacobian rank {rank} below the {relations} declared relations")]
    SingularPoint { rank: usize, relations: usize },
    #[error("chart substitutions do not annihilate relation {relation}")]
    ChartInvalid { relation: String },
    #[error("field inconsistent with chart on substituted coordinate {var}")]
    ChartInconsistent { var: String },
    #[error("missing certificate: {0}")]
    MissingCertificate(String),
    #[error("separation fails for integral {integral}: points {i} and {l} share value {value}")]
    SeparationViolated {
        integral: String,
        i: usize,
        l: usize,
        value: String,
    },
    #[error("no convergence after {iterations} iterations; residual norm {residual}")]
    NoConvergence { iterations: usize, residual: String },
    #[error("could not separate points: {0}")]
    CannotSeparate(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
