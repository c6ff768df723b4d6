use std::fmt::Write as _;

use thiserror::Error;

use crate::scalar::{tol, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProgramError {
    #[error("variable index {index} out of range for {count} variables")]
    VariableOutOfRange { index: usize, count: usize },
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("variable {index}: lower bound exceeds upper bound")]
    EmptyBounds { index: usize },
    #[error("binary variable {index} must be bounded within [0, 1]")]
    BinaryBounds { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

/// One row `Σ coeff·x (rel) rhs`, stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T> {
    pub terms: Vec<(usize, T)>,
    pub relation: Relation,
    pub rhs: T,
}

impl<T: Scalar> Constraint<T> {
    pub fn activity(&self, x: &[T]) -> T {
        self.terms
            .iter()
            .fold(T::zero(), |acc, (j, a)| acc + a.clone() * &x[*j])
    }

    pub fn is_satisfied(&self, x: &[T], eps: f64) -> bool {
        let lhs = self.activity(x);
        match self.relation {
            Relation::Le => lhs.le_tol(&self.rhs, eps),
            Relation::Ge => self.rhs.le_tol(&lhs, eps),
            Relation::Eq => lhs.eq_tol(&self.rhs, eps),
        }
    }
}

/// `minimize c·x` subject to linear rows and per-variable bounds.
///
/// Lower bounds default to zero; an upper bound of `None` means unbounded above.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T> {
    pub objective: Vec<T>,
    pub constraints: Vec<Constraint<T>>,
    pub lower: Vec<T>,
    pub upper: Vec<Option<T>>,
}

impl<T: Scalar> Default for LinearProgram<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new() -> Self {
        Self {
            objective: Vec::new(),
            constraints: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Add a variable with objective coefficient `cost` and bounds `[lower, upper]`.
    pub fn add_var(&mut self, cost: T, lower: T, upper: Option<T>) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, T)>, relation: Relation, rhs: T) -> usize {
        self.constraints.push(Constraint { terms, relation, rhs });
        self.constraints.len() - 1
    }

    pub fn validate(&self) -> Result<(), ProgramError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(ProgramError::VariableOutOfRange {
                index: self.lower.len().max(self.upper.len()),
                count: n,
            });
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(ProgramError::NonFinite("objective"));
        }
        for (j, (lo, up)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !lo.is_finite() || up.as_ref().is_some_and(|u| !u.is_finite()) {
                return Err(ProgramError::NonFinite("bounds"));
            }
            if up.as_ref().is_some_and(|u| u < lo) {
                return Err(ProgramError::EmptyBounds { index: j });
            }
        }
        for row in &self.constraints {
            if !row.rhs.is_finite() || row.terms.iter().any(|(_, a)| !a.is_finite()) {
                return Err(ProgramError::NonFinite("constraint"));
            }
            if let Some((index, _)) = row.terms.iter().find(|(j, _)| *j >= n) {
                return Err(ProgramError::VariableOutOfRange {
                    index: *index,
                    count: n,
                });
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        self.objective
            .iter()
            .zip(x)
            .fold(T::zero(), |acc, (c, v)| acc + c.clone() * v)
    }

    /// Every row and bound holds (exactly for rationals, within `eps` for floats).
    pub fn is_feasible(&self, x: &[T], eps: f64) -> bool {
        x.len() == self.num_vars()
            && self.constraints.iter().all(|row| row.is_satisfied(x, eps))
            && x.iter().zip(&self.lower).all(|(v, lo)| lo.le_tol(v, eps))
            && x.iter()
                .zip(&self.upper)
                .all(|(v, up)| up.as_ref().is_none_or(|u| v.le_tol(u, eps)))
    }

    /// Plain-text standard form, one constraint per line. Rationals print as `p/q`.
    pub fn to_text(&self) -> String {
        self.render(&[])
    }

    fn render(&self, binaries: &[usize]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "minimize {}", linear_expr(self.objective.iter().enumerate()));
        out.push_str("subject to\n");
        for (i, row) in self.constraints.iter().enumerate() {
            let terms = row.terms.iter().map(|(j, a)| (*j, a));
            let _ = writeln!(
                out,
                "  c{i}: {} {} {}",
                linear_expr(terms),
                row.relation.symbol(),
                row.rhs.to_exact_string()
            );
        }
        out.push_str("bounds\n");
        for (j, (lo, up)) in self.lower.iter().zip(&self.upper).enumerate() {
            match up {
                Some(u) => {
                    let _ = writeln!(out, "  {} <= x{j} <= {}", lo.to_exact_string(), u.to_exact_string());
                }
                None => {
                    let _ = writeln!(out, "  x{j} >= {}", lo.to_exact_string());
                }
            }
        }
        if !binaries.is_empty() {
            let names: Vec<String> = binaries.iter().map(|j| format!("x{j}")).collect();
            let _ = writeln!(out, "binary {}", names.join(" "));
        }
        out.push_str("end\n");
        out
    }
}

fn linear_expr<'a, T: Scalar>(terms: impl Iterator<Item = (usize, &'a T)>) -> String {
    let parts: Vec<String> = terms
        .filter(|(_, a)| !a.is_zero())
        .map(|(j, a)| format!("{} x{j}", a.to_exact_string()))
        .collect();
    if parts.is_empty() {
        "0".to_string()
    } else {
        parts.join(" + ")
    }
}

/// A [`LinearProgram`] in which some variables are restricted to {0, 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedIntegerProgram<T> {
    pub lp: LinearProgram<T>,
    pub binaries: Vec<usize>,
}

impl<T: Scalar> MixedIntegerProgram<T> {
    pub fn new(lp: LinearProgram<T>, binaries: Vec<usize>) -> Self {
        Self { lp, binaries }
    }

    pub fn validate(&self) -> Result<(), ProgramError> {
        self.lp.validate()?;
        let n = self.lp.num_vars();
        for &j in &self.binaries {
            if j >= n {
                return Err(ProgramError::VariableOutOfRange { index: j, count: n });
            }
            let bounded = self.lp.lower[j] >= T::zero() && self.lp.upper[j].as_ref().is_some_and(|u| *u <= T::one());
            if !bounded {
                return Err(ProgramError::BinaryBounds { index: j });
            }
        }
        Ok(())
    }

    pub fn is_feasible(&self, x: &[T], eps: f64) -> bool {
        self.lp.is_feasible(x, eps)
            && self
                .binaries
                .iter()
                .all(|&j| x[j].is_zero_tol(eps) || x[j].eq_tol(&T::one(), eps))
    }

    pub fn to_text(&self) -> String {
        self.lp.render(&self.binaries)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NodeLimit,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::IterationLimit => "iteration_limit",
            SolveStatus::NodeLimit => "node_limit",
        }
    }
}

/// Outcome of an LP or MILP solve.
///
/// `solution`, `objective` and (for LPs) `duals` are present iff the status is
/// `Optimal`. A MILP stopped by its node limit keeps its best integer point in
/// `incumbent`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptResult<T> {
    pub status: SolveStatus,
    pub solution: Option<Vec<T>>,
    pub objective: Option<T>,
    /// One multiplier per constraint row, in the sign convention of the original rows.
    pub duals: Option<Vec<T>>,
    pub iterations: usize,
    /// Branch-and-bound nodes whose relaxation was solved; 0 for plain LPs.
    pub nodes: usize,
    /// Objective of the root LP relaxation (MILP only).
    pub root_bound: Option<T>,
    pub incumbent: Option<Vec<T>>,
}

impl<T: Scalar> OptResult<T> {
    pub fn failed(status: SolveStatus, iterations: usize) -> Self {
        Self {
            status,
            solution: None,
            objective: None,
            duals: None,
            iterations,
            nodes: 0,
            root_bound: None,
            incumbent: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Check primal feasibility, dual feasibility and complementary slackness of an
/// optimal LP result. Exact for rationals.
pub fn verify_optimality<T: Scalar>(lp: &LinearProgram<T>, result: &OptResult<T>) -> bool {
    let (Some(x), Some(y)) = (&result.solution, &result.duals) else {
        return false;
    };
    let eps = tol::FEASIBILITY;
    if !lp.is_feasible(x, eps) || y.len() != lp.constraints.len() {
        return false;
    }
    // Sign of each multiplier and slackness of its row.
    for (row, yi) in lp.constraints.iter().zip(y) {
        let sign_ok = match row.relation {
            Relation::Ge => !yi.lt_tol(&T::zero(), eps),
            Relation::Le => yi.le_tol(&T::zero(), eps),
            Relation::Eq => true,
        };
        if !sign_ok {
            return false;
        }
        if row.relation != Relation::Eq {
            let slack = row.activity(x) - &row.rhs;
            if !(slack * yi).is_zero_tol(eps) {
                return false;
            }
        }
    }
    // Reduced costs d = c - Aᵀy must match each variable's bound position.
    let mut reduced = lp.objective.clone();
    for (row, yi) in lp.constraints.iter().zip(y) {
        for (j, a) in &row.terms {
            reduced[*j].sub_mul_assign(a, yi);
        }
    }
    for (j, d) in reduced.iter().enumerate() {
        let at_lower = x[j].eq_tol(&lp.lower[j], eps);
        let at_upper = lp.upper[j].as_ref().is_some_and(|u| x[j].eq_tol(u, eps));
        let ok = match (at_lower, at_upper) {
            (true, true) => true,
            (true, false) => !d.lt_tol(&T::zero(), eps),
            (false, true) => d.le_tol(&T::zero(), eps),
            (false, false) => d.is_zero_tol(eps),
        };
        if !ok {
            return false;
        }
    }
    // Zero duality gap: c·x = b·y + Σ d_j x_j over variables resting on a bound.
    let primal = lp.objective_value(x);
    let dual = lp
        .constraints
        .iter()
        .zip(y)
        .fold(T::zero(), |acc, (row, yi)| acc + row.rhs.clone() * yi)
        + reduced.iter().zip(x).fold(T::zero(), |acc, (d, v)| acc + d.clone() * v);
    primal.eq_tol(&dual, eps)
}
