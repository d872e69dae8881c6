//! A small self-contained conic optimizer.
//!
//! Problems are stated over real variables as `minimize c'x` subject to a
//! list of affine-in-x cone memberships: equalities (zero cone), linear
//! inequalities (nonnegative orthant), second-order cones and 3D power
//! cones. Power cones are accepted with any rational exponent and are
//! lowered to exact second-order-cone towers before the solve, so the
//! interior-point core only ever sees symmetric cones.
//!
//! The core is a homogeneous self-dual embedding with Nesterov-Todd
//! scaling and a Mehrotra predictor-corrector step, which cleanly
//! separates optimal, infeasible and unbounded outcomes.

mod expr;
mod kkt;
mod lower;
mod problem;
mod scaling;
mod solver;

pub use expr::LinExpr;
pub use problem::{ConeSpec, ConicProblem, ProblemError, VarId};
pub use solver::{Residuals, Settings, SolveResult, Status};
