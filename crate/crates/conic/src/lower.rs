//! Lowering of the user-facing problem to the interior-point core's form
//! `A x + s = b, s in K` with K a product of zero, nonnegative and
//! second-order cones.
//!
//! Power cones are replaced by exact second-order-cone towers. The exponent
//! is interpreted as the nearest rational p/q with a small denominator;
//! `x^(p/q) y^((q-p)/q) >= |z|` is the geometric-mean inequality over a list
//! holding `x` p times and `y` q-p times, which has the classical recursive
//! `g^2 <= a*b` rotated-cone representation.

use crate::expr::LinExpr;
use crate::problem::{Block, ConeSpec, ConicProblem, ProblemError};

pub(crate) const MAX_POW_DENOMINATOR: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ConeKind {
    Zero,
    Nonneg,
    Soc,
}

/// One row of `A x + s = b`: sparse coefficients of A and the entry of b.
pub(crate) type Row = (Vec<(usize, f64)>, f64);

#[derive(Debug, Clone)]
pub(crate) struct FormBlock {
    pub kind: ConeKind,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub(crate) struct SolveForm {
    pub n: usize,
    pub c: Vec<f64>,
    pub blocks: Vec<FormBlock>,
}

pub(crate) struct Lowered {
    pub form: SolveForm,
}

/// Best rational approximation p/q, q <= max_q, by continued fractions.
fn rationalize(alpha: f64, max_q: u32) -> Option<(u32, u32)> {
    let (mut h0, mut k0, mut h1, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut x = alpha;
    for _ in 0..64 {
        let a = x.floor() as i64;
        let h2 = a * h1 + h0;
        let k2 = a * k1 + k0;
        if k2 > max_q as i64 {
            break;
        }
        h0 = h1;
        k0 = k1;
        h1 = h2;
        k1 = k2;
        let frac = x - a as f64;
        if frac.abs() < 1e-15 {
            break;
        }
        x = 1.0 / frac;
    }
    if k1 == 0 {
        return None;
    }
    let (p, q) = (h1, k1);
    if p <= 0 || p >= q {
        return None;
    }
    if (alpha - p as f64 / q as f64).abs() > 1e-10 {
        return None;
    }
    Some((p as u32, q as u32))
}

struct FormBuilder {
    n: usize,
    blocks: Vec<FormBlock>,
}

impl FormBuilder {
    fn new_var(&mut self) -> usize {
        self.n += 1;
        self.n - 1
    }

    fn push_expr_block(&mut self, kind: ConeKind, exprs: &[LinExpr]) {
        let rows = exprs
            .iter()
            .map(|e| {
                let mut coeffs = e.compacted();
                for t in &mut coeffs {
                    t.1 = -t.1;
                }
                (coeffs, e.constant)
            })
            .collect();
        self.blocks.push(FormBlock { kind, rows });
    }

    /// Geometric-mean tower: enforce `gm(leaves) >= bound >= 0`,
    /// where every leaf must also end up nonnegative.
    fn gm_tower(&mut self, leaves: Vec<LinExpr>, bound: LinExpr) {
        let mut level = leaves;
        let target = level.len().next_power_of_two();
        while level.len() < target {
            level.push(bound.clone());
        }
        while level.len() > 1 {
            let mut next = Vec::with_capacity(level.len() / 2);
            for pair in level.chunks(2) {
                let g = self.new_var();
                let ge = LinExpr::var(crate::problem::VarId(g));
                // (a+b, a-b, 2g) in SOC  <=>  g^2 <= a*b, a+b >= 0
                self.push_expr_block(
                    ConeKind::Soc,
                    &[
                        pair[0].clone().plus(&pair[1]),
                        pair[0].clone().minus(&pair[1]),
                        ge.clone().scaled(2.0),
                    ],
                );
                self.push_expr_block(ConeKind::Nonneg, &[ge.clone()]);
                next.push(ge);
            }
            level = next;
        }
        self.push_expr_block(ConeKind::Nonneg, &[level.pop().unwrap().minus(&bound)]);
    }

    fn lower_power3(&mut self, alpha: f64, rows: &[LinExpr]) -> Result<(), ProblemError> {
        let (p, q) = rationalize(alpha, MAX_POW_DENOMINATOR)
            .ok_or(ProblemError::ExponentNotRational(alpha, MAX_POW_DENOMINATOR))?;
        let (x, y, z) = (&rows[0], &rows[1], &rows[2]);
        self.push_expr_block(ConeKind::Nonneg, &[x.clone(), y.clone()]);
        // |z| handle: constants stay constants, otherwise an auxiliary bound.
        let zmag = if z.terms.is_empty() {
            LinExpr::constant(z.constant.abs())
        } else {
            let t = LinExpr::var(crate::problem::VarId(self.new_var()));
            self.push_expr_block(
                ConeKind::Nonneg,
                &[t.clone().minus(z), t.clone().plus(z)],
            );
            t
        };
        let mut leaves = Vec::with_capacity(q as usize);
        for _ in 0..p {
            leaves.push(x.clone());
        }
        for _ in 0..(q - p) {
            leaves.push(y.clone());
        }
        self.gm_tower(leaves, zmag);
        Ok(())
    }

    fn lower_block(&mut self, block: &Block) -> Result<(), ProblemError> {
        match block.cone {
            ConeSpec::Zero => self.push_expr_block(ConeKind::Zero, &block.rows),
            ConeSpec::Nonneg => self.push_expr_block(ConeKind::Nonneg, &block.rows),
            ConeSpec::Soc => self.push_expr_block(ConeKind::Soc, &block.rows),
            ConeSpec::Power3 { alpha } => self.lower_power3(alpha, &block.rows)?,
        }
        Ok(())
    }
}

pub(crate) fn lower(p: &ConicProblem) -> Result<Lowered, ProblemError> {
    let mut fb = FormBuilder { n: p.num_vars, blocks: Vec::new() };
    for block in &p.blocks {
        fb.lower_block(block)?;
    }
    let mut c = vec![0.0; fb.n];
    for &(i, v) in &p.objective {
        c[i] = v;
    }
    Ok(Lowered { form: SolveForm { n: fb.n, c, blocks: fb.blocks } })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationalize_small_fractions() {
        assert_eq!(rationalize(2.0 / 3.0, 64), Some((2, 3)));
        assert_eq!(rationalize(1.0 / 3.0, 64), Some((1, 3)));
        assert_eq!(rationalize(0.5, 64), Some((1, 2)));
        assert_eq!(rationalize(0.6, 64), Some((3, 5)));
        assert_eq!(rationalize(3.0 / 64.0, 64), Some((3, 64)));
        assert!(rationalize(0.123456789, 64).is_none());
    }
}
