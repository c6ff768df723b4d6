//! Linear and mixed-binary programming over exact rationals or `f64`.
//!
//! The solver is a dense bounded-variable two-phase simplex with Bland's rule;
//! [`solve_milp`] adds best-first branch and bound on binary variables. Both are
//! generic over [`Scalar`], so the same code runs exactly on [`Rational`] or
//! approximately on `f64`.

mod milp;
mod program;
pub mod scalar;
mod simplex;

pub use milp::{solve_milp, solve_milp_with, MilpOptions};
pub use program::{
    verify_optimality, Constraint, LinearProgram, MixedIntegerProgram, OptResult, ProgramError, Relation, SolveStatus,
};
pub use scalar::{tol, Mode, Rational, Scalar};
pub use simplex::{solve_lp, solve_lp_with, SimplexOptions};
