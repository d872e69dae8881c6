//! Problem container and build helpers.

use std::io::Write;

use crate::expr::LinExpr;
use crate::lower;
use crate::solver::{self, Settings, SolveResult};

/// Handle to a problem variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(&self) -> usize {
        self.0
    }
}

/// Cone tag for a constraint block. The block's affine rows, evaluated at a
/// feasible point, must lie in the cone.
#[derive(Debug, Clone, PartialEq)]
pub enum ConeSpec {
    /// Every row equals zero.
    Zero,
    /// Every row is nonnegative.
    Nonneg,
    /// `rows[0] >= || rows[1..] ||_2`.
    Soc,
    /// `rows[0]^alpha * rows[1]^(1-alpha) >= |rows[2]|` with `rows[0], rows[1] >= 0`.
    Power3 { alpha: f64 },
}

#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub cone: ConeSpec,
    pub rows: Vec<LinExpr>,
}

#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error("constraint references variable {0} but only {1} variables exist")]
    BadVariable(usize, usize),
    #[error("second-order cone block needs at least one row")]
    EmptySoc,
    #[error("power cone exponent {0} is outside (0, 1)")]
    BadExponent(f64),
    #[error("power cone exponent {0} has no rational form p/q with q <= {1}")]
    ExponentNotRational(f64, u32),
}

/// A conic program `minimize c'x` subject to affine cone memberships.
#[derive(Debug, Clone, Default)]
pub struct ConicProblem {
    pub(crate) num_vars: usize,
    pub(crate) objective: Vec<(usize, f64)>,
    pub(crate) obj_constant: f64,
    pub(crate) blocks: Vec<Block>,
}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self) -> VarId {
        self.num_vars += 1;
        VarId(self.num_vars - 1)
    }

    pub fn add_vars(&mut self, k: usize) -> Vec<VarId> {
        (0..k).map(|_| self.add_var()).collect()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Set the objective to `minimize expr`. The constant part is carried
    /// through to the reported objective value.
    pub fn minimize(&mut self, expr: LinExpr) {
        self.objective = expr.compacted();
        self.obj_constant = expr.constant;
    }

    pub fn maximize(&mut self, expr: LinExpr) {
        self.minimize(expr.scaled(-1.0));
        // keep the reported objective in the caller's orientation is the
        // caller's business; solve() reports the minimized value.
    }

    /// `expr == 0`.
    pub fn add_linear_eq(&mut self, expr: LinExpr) {
        self.blocks.push(Block { cone: ConeSpec::Zero, rows: vec![expr] });
    }

    /// `expr >= 0`.
    pub fn add_linear_ge(&mut self, expr: LinExpr) {
        self.blocks.push(Block { cone: ConeSpec::Nonneg, rows: vec![expr] });
    }

    /// `head >= || tail ||_2`. A dimension-1 cone (empty tail) degenerates to
    /// `head >= 0`.
    pub fn add_soc(&mut self, head: LinExpr, tail: Vec<LinExpr>) {
        let mut rows = Vec::with_capacity(tail.len() + 1);
        rows.push(head);
        rows.extend(tail);
        self.blocks.push(Block { cone: ConeSpec::Soc, rows });
    }

    /// `x^alpha * y^(1-alpha) >= |z|`, `x, y >= 0`.
    pub fn add_power3(&mut self, alpha: f64, x: LinExpr, y: LinExpr, z: LinExpr) {
        self.blocks.push(Block { cone: ConeSpec::Power3 { alpha }, rows: vec![x, y, z] });
    }

    /// Epigraph of the inverse square root: `t^2 * s >= 1` with `t, s >= 0`,
    /// i.e. `t >= s^(-1/2)`. Encoded as the power cone `t^(2/3) s^(1/3) >= 1`.
    pub fn add_inv_sqrt_epigraph(&mut self, t: LinExpr, s: LinExpr) {
        self.add_power3(2.0 / 3.0, t, s, LinExpr::constant(1.0));
    }

    /// Epigraph of the cube: `q >= |s|^3`. Encoded as `q^(1/3) * 1 >= |s|`.
    pub fn add_cubic_epigraph(&mut self, q: LinExpr, s: LinExpr) {
        self.add_power3(1.0 / 3.0, q, LinExpr::constant(1.0), s);
    }

    fn validate(&self) -> Result<(), ProblemError> {
        for block in &self.blocks {
            match block.cone {
                ConeSpec::Soc if block.rows.is_empty() => return Err(ProblemError::EmptySoc),
                ConeSpec::Power3 { alpha } if !(alpha > 0.0 && alpha < 1.0) => {
                    return Err(ProblemError::BadExponent(alpha))
                }
                _ => {}
            }
            for row in &block.rows {
                for &(i, _) in &row.terms {
                    if i >= self.num_vars {
                        return Err(ProblemError::BadVariable(i, self.num_vars));
                    }
                }
            }
        }
        for &(i, _) in &self.objective {
            if i >= self.num_vars {
                return Err(ProblemError::BadVariable(i, self.num_vars));
            }
        }
        Ok(())
    }

    /// Lower power cones and run the interior-point core.
    pub fn solve(&self, settings: &Settings) -> Result<SolveResult, ProblemError> {
        self.validate()?;
        let lowered = lower::lower(self)?;
        let mut result = solver::solve(&lowered.form, settings);
        if let Some(x) = result.x.as_mut() {
            x.truncate(self.num_vars);
        }
        if let Some(obj) = result.objective.as_mut() {
            *obj += self.obj_constant;
        }
        Ok(result)
    }

    /// Write the problem in a plain-text standard form (objective, then one
    /// line per constraint row, grouped by cone block) for offline
    /// cross-checking with other tools.
    pub fn dump<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "conic-problem v1")?;
        writeln!(w, "vars {}", self.num_vars)?;
        write!(w, "min")?;
        for &(i, c) in &self.objective {
            write!(w, " {c:+.17e}*x{i}")?;
        }
        writeln!(w, " {:+.17e}", self.obj_constant)?;
        for (bi, block) in self.blocks.iter().enumerate() {
            let tag = match block.cone {
                ConeSpec::Zero => "zero".to_string(),
                ConeSpec::Nonneg => "nonneg".to_string(),
                ConeSpec::Soc => "soc".to_string(),
                ConeSpec::Power3 { alpha } => format!("pow3 {alpha:.17e}"),
            };
            writeln!(w, "block {bi} {tag} rows {}", block.rows.len())?;
            for row in &block.rows {
                write!(w, "  ")?;
                for &(i, c) in &row.compacted() {
                    write!(w, "{c:+.17e}*x{i} ")?;
                }
                writeln!(w, "{:+.17e}", row.constant)?;
            }
        }
        Ok(())
    }
}
