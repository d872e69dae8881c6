//! Affine expressions over problem variables.

use crate::problem::VarId;

/// A sparse affine form `sum(coeff * var) + constant`.
#[derive(Debug, Clone, Default)]
pub struct LinExpr {
    pub(crate) terms: Vec<(usize, f64)>,
    pub(crate) constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        LinExpr { terms: Vec::new(), constant: c }
    }

    pub fn var(v: VarId) -> Self {
        LinExpr { terms: vec![(v.0, 1.0)], constant: 0.0 }
    }

    pub fn term(v: VarId, coeff: f64) -> Self {
        LinExpr { terms: vec![(v.0, coeff)], constant: 0.0 }
    }

    pub fn add_term(mut self, v: VarId, coeff: f64) -> Self {
        self.terms.push((v.0, coeff));
        self
    }

    pub fn add_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn scaled(mut self, k: f64) -> Self {
        for t in &mut self.terms {
            t.1 *= k;
        }
        self.constant *= k;
        self
    }

    /// `self - other`.
    pub fn minus(mut self, other: &LinExpr) -> Self {
        for &(i, c) in &other.terms {
            self.terms.push((i, -c));
        }
        self.constant -= other.constant;
        self
    }

    pub fn plus(mut self, other: &LinExpr) -> Self {
        for &(i, c) in &other.terms {
            self.terms.push((i, c));
        }
        self.constant += other.constant;
        self
    }

    /// Collapse duplicate variable entries (used before handing rows to the solver).
    pub(crate) fn compacted(&self) -> Vec<(usize, f64)> {
        let mut terms = self.terms.clone();
        terms.sort_unstable_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (i, c) in terms {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += c,
                _ => out.push((i, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.constant;
        for &(i, c) in &self.terms {
            v += c * x[i];
        }
        v
    }
}
