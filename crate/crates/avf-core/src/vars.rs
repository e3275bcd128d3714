//! Ordered variable lists.
//!
//! Every polynomial carries a shared `VarSet`; all arithmetic requires the
//! same list in the same order. The declared order also fixes the
//! graded-lexicographic term order (earlier variables are larger).

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

#[derive(Debug, PartialEq, Eq)]
pub struct Vars {
    names: Vec<String>,
}

pub type VarSet = Arc<Vars>;

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Builds a variable list; names must be distinct identifiers.
pub fn varset<S: AsRef<str>>(names: &[S]) -> Result<VarSet> {
    let mut seen = Vec::new();
    for n in names {
        let n = n.as_ref();
        if !is_identifier(n) {
            return Err(Error::Invalid(format!("`{n}` is not a valid variable name")));
        }
        if seen.iter().any(|s| s == n) {
            return Err(Error::Invalid(format!("duplicate variable `{n}`")));
        }
        seen.push(n.to_string());
    }
    Ok(Arc::new(Vars { names: seen }))
}

impl Vars {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// New list with extra trailing variables (used for flow time variables).
    pub fn extended<S: AsRef<str>>(&self, extra: &[S]) -> Result<VarSet> {
        let mut all: Vec<&str> = self.names.iter().map(|s| s.as_str()).collect();
        for e in extra {
            all.push(e.as_ref());
        }
        varset(&all)
    }
}

impl fmt::Display for Vars {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.names.join(","))
    }
}

/// True when two varsets have identical names in identical order.
pub fn same_vars(a: &VarSet, b: &VarSet) -> bool {
    Arc::ptr_eq(a, b) || a.names == b.names
}

pub fn require_same_vars(a: &VarSet, b: &VarSet) -> Result<()> {
    if same_vars(a, b) {
        Ok(())
    } else {
        Err(Error::VarlistMismatch {
            left: a.to_string(),
            right: b.to_string(),
        })
    }
}
