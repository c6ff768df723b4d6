//! Dense two-phase primal simplex with bounded variables.
//!
//! Every variable is shifted so its lower bound is zero; finite upper bounds
//! stay on the columns (nonbasic variables rest at either bound) instead of
//! becoming rows. Phase one minimises the sum of artificials; phase two the
//! real objective. Bland's smallest-index rule picks both the entering and the
//! leaving variable, so degenerate programs cannot cycle.

use crate::program::{LinearProgram, OptResult, ProgramError, Relation, SolveStatus};
use crate::scalar::{tol, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimplexOptions {
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 1_000_000,
        }
    }
}

/// Solve with default options.
pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>) -> Result<OptResult<T>, ProgramError> {
    solve_lp_with(lp, &SimplexOptions::default())
}

pub fn solve_lp_with<T: Scalar>(lp: &LinearProgram<T>, options: &SimplexOptions) -> Result<OptResult<T>, ProgramError> {
    lp.validate()?;
    Ok(Tableau::build(lp).solve(lp, options))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Column {
    Structural,
    Slack,
    Surplus,
    Artificial,
}

enum Step {
    Optimal,
    Unbounded,
    IterationLimit,
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    /// Value of the basic variable of each row.
    beta: Vec<T>,
    basis: Vec<usize>,
    kinds: Vec<Column>,
    upper: Vec<Option<T>>,
    at_upper: Vec<bool>,
    is_basic: Vec<bool>,
    reduced: Vec<T>,
    /// Column holding +e_r for row r (its slack or artificial).
    unit_col: Vec<usize>,
    /// -1 where the row was negated to make its right-hand side nonnegative.
    row_sign: Vec<bool>,
    iterations: usize,
}

fn nonzero<T: Scalar>(x: &T) -> bool {
    !x.is_zero_tol(tol::PIVOT)
}

fn negative<T: Scalar>(x: &T) -> bool {
    x.lt_tol(&T::zero(), tol::PIVOT)
}

fn positive<T: Scalar>(x: &T) -> bool {
    T::zero().lt_tol(x, tol::PIVOT)
}

impl<T: Scalar> Tableau<T> {
    fn build(lp: &LinearProgram<T>) -> Self {
        let n = lp.num_vars();
        let m = lp.constraints.len();

        let mut kinds = vec![Column::Structural; n];
        let mut upper: Vec<Option<T>> = lp
            .lower
            .iter()
            .zip(&lp.upper)
            .map(|(lo, up)| up.as_ref().map(|u| u.clone() - lo))
            .collect();

        // Auxiliary columns get appended per row.
        let mut aux: Vec<Vec<(usize, T)>> = Vec::with_capacity(m);
        let mut dense_rows = Vec::with_capacity(m);
        let mut beta = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut unit_col = Vec::with_capacity(m);
        let mut row_sign = Vec::with_capacity(m);

        for row in &lp.constraints {
            let mut coeffs = vec![T::zero(); n];
            for (j, a) in &row.terms {
                coeffs[*j] += a;
            }
            let mut rhs = row.rhs.clone();
            for (j, a) in coeffs.iter().enumerate() {
                if !a.is_zero() {
                    rhs.sub_mul_assign(a, &lp.lower[j]);
                }
            }
            let mut relation = row.relation;
            let negated = rhs < T::zero();
            if negated {
                for a in coeffs.iter_mut() {
                    *a = -std::mem::replace(a, T::zero());
                }
                rhs = -rhs;
                relation = match relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            let mut extra = Vec::new();
            let unit = match relation {
                Relation::Le => {
                    let col = kinds.len();
                    kinds.push(Column::Slack);
                    upper.push(None);
                    extra.push((col, T::one()));
                    col
                }
                Relation::Ge => {
                    let surplus = kinds.len();
                    kinds.push(Column::Surplus);
                    upper.push(None);
                    extra.push((surplus, -T::one()));
                    let art = kinds.len();
                    kinds.push(Column::Artificial);
                    upper.push(None);
                    extra.push((art, T::one()));
                    art
                }
                Relation::Eq => {
                    let art = kinds.len();
                    kinds.push(Column::Artificial);
                    upper.push(None);
                    extra.push((art, T::one()));
                    art
                }
            };
            dense_rows.push(coeffs);
            aux.push(extra);
            beta.push(rhs);
            basis.push(unit);
            unit_col.push(unit);
            row_sign.push(negated);
        }

        let ncols = kinds.len();
        let rows: Vec<Vec<T>> = dense_rows
            .into_iter()
            .zip(aux)
            .map(|(mut coeffs, extra)| {
                coeffs.resize(ncols, T::zero());
                for (col, v) in extra {
                    coeffs[col] = v;
                }
                coeffs
            })
            .collect();

        let mut is_basic = vec![false; ncols];
        for &b in &basis {
            is_basic[b] = true;
        }

        Self {
            rows,
            beta,
            basis,
            kinds,
            upper,
            at_upper: vec![false; ncols],
            is_basic,
            reduced: vec![T::zero(); ncols],
            unit_col,
            row_sign,
            iterations: 0,
        }
    }

    fn ncols(&self) -> usize {
        self.kinds.len()
    }

    /// Recompute reduced costs d = c - c_B B⁻¹A for the given column costs.
    fn price_out(&mut self, costs: &[T]) {
        let mut reduced = costs.to_vec();
        for (r, row) in self.rows.iter().enumerate() {
            let cb = &costs[self.basis[r]];
            if cb.is_zero() {
                continue;
            }
            for (k, a) in row.iter().enumerate() {
                if !a.is_zero() {
                    reduced[k].sub_mul_assign(cb, a);
                }
            }
        }
        self.reduced = reduced;
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.upper[j].as_ref().is_some_and(|u| u.is_zero_tol(tol::PIVOT))
    }

    fn entering(&self, allow_artificial: bool) -> Option<usize> {
        (0..self.ncols()).find(|&j| {
            !self.is_basic[j]
                && (allow_artificial || self.kinds[j] != Column::Artificial)
                && !self.is_fixed(j)
                && if self.at_upper[j] {
                    positive(&self.reduced[j])
                } else {
                    negative(&self.reduced[j])
                }
        })
    }

    fn run(&mut self, allow_artificial: bool, max_iterations: usize) -> Step {
        loop {
            let Some(j) = self.entering(allow_artificial) else {
                return Step::Optimal;
            };
            if self.iterations >= max_iterations {
                return Step::IterationLimit;
            }
            self.iterations += 1;
            let increasing = !self.at_upper[j];

            // Ratio test: (row, step length), ties to the smallest basic index.
            let mut best: Option<(usize, T)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                let alpha = &row[j];
                if !nonzero(alpha) {
                    continue;
                }
                let falls = (*alpha > T::zero()) == increasing;
                let limit = if falls {
                    self.beta[r].clone() / alpha.abs()
                } else {
                    match &self.upper[self.basis[r]] {
                        Some(u) => (u.clone() - &self.beta[r]) / alpha.abs(),
                        None => continue,
                    }
                };
                let limit = T::max_of(limit, T::zero());
                let better = match &best {
                    None => true,
                    Some((br, bl)) => match limit.cmp_tol(bl, tol::PIVOT) {
                        std::cmp::Ordering::Less => true,
                        std::cmp::Ordering::Equal => self.basis[r] < self.basis[*br],
                        std::cmp::Ordering::Greater => false,
                    },
                };
                if better {
                    best = Some((r, limit));
                }
            }

            let flip = self.upper[j].clone();
            let take_flip = match (&flip, &best) {
                (Some(u), Some((_, t))) => u.le_tol(t, tol::PIVOT),
                (Some(_), None) => true,
                (None, _) => false,
            };

            if take_flip {
                let u = flip.expect("flip bound");
                let delta = if increasing { u } else { -u };
                for (r, row) in self.rows.iter().enumerate() {
                    if !row[j].is_zero() {
                        self.beta[r].sub_mul_assign(&delta, &row[j]);
                    }
                }
                self.at_upper[j] = increasing;
                self.clean_beta();
                continue;
            }

            let Some((p, step)) = best else {
                return Step::Unbounded;
            };
            self.pivot(p, j, step, increasing);
        }
    }

    /// Bring column `j` into the basis at row `p`, moving it by `step`.
    fn pivot(&mut self, p: usize, j: usize, step: T, increasing: bool) {
        let delta = if increasing { step } else { -step };
        let leaving = self.basis[p];
        let leaving_falls = (self.rows[p][j] > T::zero()) == increasing;

        let start = if self.at_upper[j] {
            self.upper[j].clone().expect("at upper implies finite bound")
        } else {
            T::zero()
        };
        if !delta.is_zero() {
            for (r, row) in self.rows.iter().enumerate() {
                if r != p && !row[j].is_zero() {
                    self.beta[r].sub_mul_assign(&delta, &row[j]);
                }
            }
        }
        self.beta[p] = start + &delta;

        let mut pivot_row = std::mem::take(&mut self.rows[p]);
        let pivot = pivot_row[j].clone();
        let support: Vec<usize> = pivot_row
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_zero())
            .map(|(k, _)| k)
            .collect();
        for &k in &support {
            pivot_row[k] = pivot_row[k].clone() / &pivot;
        }
        for row in self.rows.iter_mut() {
            if row.is_empty() || row[j].is_zero() {
                continue;
            }
            let factor = row[j].clone();
            for &k in &support {
                row[k].sub_mul_assign(&factor, &pivot_row[k]);
            }
            if !T::is_exact() {
                row[j] = T::zero();
            }
        }
        let dj = self.reduced[j].clone();
        if !dj.is_zero() {
            for &k in &support {
                self.reduced[k].sub_mul_assign(&dj, &pivot_row[k]);
            }
            if !T::is_exact() {
                self.reduced[j] = T::zero();
            }
        }
        self.rows[p] = pivot_row;

        self.is_basic[leaving] = false;
        self.at_upper[leaving] = !leaving_falls && self.upper[leaving].is_some();
        self.is_basic[j] = true;
        self.at_upper[j] = false;
        self.basis[p] = j;
        self.clean_beta();
    }

    fn clean_beta(&mut self) {
        if T::is_exact() {
            return;
        }
        for (r, b) in self.beta.iter_mut().enumerate() {
            if b.is_zero_tol(tol::PIVOT) {
                *b = T::zero();
            } else if let Some(u) = &self.upper[self.basis[r]] {
                if b.eq_tol(u, tol::PIVOT) {
                    *b = u.clone();
                }
            }
        }
    }

    fn artificial_sum(&self) -> T {
        self.basis
            .iter()
            .zip(&self.beta)
            .filter(|(b, _)| self.kinds[**b] == Column::Artificial)
            .fold(T::zero(), |acc, (_, v)| acc + v)
    }

    /// After phase one: pivot zero-level artificials out where possible and fix
    /// every artificial at zero.
    fn retire_artificials(&mut self) {
        for p in 0..self.rows.len() {
            if self.kinds[self.basis[p]] != Column::Artificial {
                continue;
            }
            let candidate = (0..self.ncols())
                .find(|&k| !self.is_basic[k] && self.kinds[k] != Column::Artificial && nonzero(&self.rows[p][k]));
            if let Some(k) = candidate {
                let increasing = !self.at_upper[k];
                self.pivot(p, k, T::zero(), increasing);
            }
        }
        for k in 0..self.ncols() {
            if self.kinds[k] == Column::Artificial {
                self.upper[k] = Some(T::zero());
                self.at_upper[k] = false;
            }
        }
    }

    fn value(&self, j: usize) -> T {
        if self.is_basic[j] {
            let r = self.basis.iter().position(|&b| b == j).expect("basic column has a row");
            self.beta[r].clone()
        } else if self.at_upper[j] {
            self.upper[j].clone().expect("finite upper")
        } else {
            T::zero()
        }
    }

    fn solve(mut self, lp: &LinearProgram<T>, options: &SimplexOptions) -> OptResult<T> {
        let ncols = self.ncols();
        let phase_one: Vec<T> = self
            .kinds
            .iter()
            .map(|k| if *k == Column::Artificial { T::one() } else { T::zero() })
            .collect();
        self.price_out(&phase_one);
        match self.run(true, options.max_iterations) {
            Step::Optimal => {}
            Step::IterationLimit => return OptResult::failed(SolveStatus::IterationLimit, self.iterations),
            // Phase one is bounded below by zero.
            Step::Unbounded => unreachable!("phase one objective is bounded"),
        }
        if positive(&self.artificial_sum()) {
            return OptResult::failed(SolveStatus::Infeasible, self.iterations);
        }
        self.retire_artificials();

        let mut costs = vec![T::zero(); ncols];
        costs[..lp.num_vars()].clone_from_slice(&lp.objective);
        self.price_out(&costs);
        match self.run(false, options.max_iterations) {
            Step::Optimal => {}
            Step::IterationLimit => return OptResult::failed(SolveStatus::IterationLimit, self.iterations),
            Step::Unbounded => return OptResult::failed(SolveStatus::Unbounded, self.iterations),
        }

        let x: Vec<T> = (0..lp.num_vars())
            .map(|j| lp.lower[j].clone() + &self.value(j))
            .collect();
        let duals: Vec<T> = self
            .unit_col
            .iter()
            .zip(&self.row_sign)
            .map(|(&col, &negated)| {
                let y = -self.reduced[col].clone();
                if negated {
                    -y
                } else {
                    y
                }
            })
            .collect();
        let objective = lp.objective_value(&x);
        OptResult {
            status: SolveStatus::Optimal,
            solution: Some(x),
            objective: Some(objective),
            duals: Some(duals),
            iterations: self.iterations,
            nodes: 0,
            root_bound: None,
            incumbent: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::verify_optimality;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn single_lower_bound_row() {
        // min x s.t. x >= 3
        let mut lp = LinearProgram::<Rational>::new();
        let x = lp.add_var(q(1, 1), q(0, 1), None);
        lp.add_constraint(vec![(x, q(1, 1))], Relation::Ge, q(3, 1));
        let res = solve_lp(&lp).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert_eq!(res.solution.as_deref(), Some(&[q(3, 1)][..]));
        assert_eq!(res.objective, Some(q(3, 1)));
        assert!(verify_optimality(&lp, &res));
    }

    #[test]
    fn equality_and_inequality() {
        // min x + y s.t. x + y >= 2, x - y = 0
        let mut lp = LinearProgram::<Rational>::new();
        let x = lp.add_var(q(1, 1), q(0, 1), None);
        let y = lp.add_var(q(1, 1), q(0, 1), None);
        lp.add_constraint(vec![(x, q(1, 1)), (y, q(1, 1))], Relation::Ge, q(2, 1));
        lp.add_constraint(vec![(x, q(1, 1)), (y, q(-1, 1))], Relation::Eq, q(0, 1));
        let res = solve_lp(&lp).unwrap();
        assert_eq!(res.solution, Some(vec![q(1, 1), q(1, 1)]));
        assert_eq!(res.objective, Some(q(2, 1)));
        assert!(verify_optimality(&lp, &res));
    }

    #[test]
    fn float_mode_matches() {
        let mut lp = LinearProgram::<f64>::new();
        let x = lp.add_var(1.0, 0.0, None);
        let y = lp.add_var(1.0, 0.0, None);
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Ge, 2.0);
        lp.add_constraint(vec![(x, 1.0), (y, -1.0)], Relation::Eq, 0.0);
        let res = solve_lp(&lp).unwrap();
        let sol = res.solution.clone().unwrap();
        assert!((sol[0] - 1.0).abs() < 1e-12 && (sol[1] - 1.0).abs() < 1e-12);
        assert!(verify_optimality(&lp, &res));
    }

    #[test]
    fn infeasible_and_unbounded_statuses() {
        let mut lp = LinearProgram::<Rational>::new();
        let x = lp.add_var(q(1, 1), q(0, 1), Some(q(1, 1)));
        lp.add_constraint(vec![(x, q(1, 1))], Relation::Ge, q(2, 1));
        let res = solve_lp(&lp).unwrap();
        assert_eq!(res.status, SolveStatus::Infeasible);
        assert!(res.solution.is_none());

        let mut lp = LinearProgram::<Rational>::new();
        let x = lp.add_var(q(-1, 1), q(0, 1), None);
        let y = lp.add_var(q(0, 1), q(0, 1), None);
        lp.add_constraint(vec![(x, q(1, 1)), (y, q(-1, 1))], Relation::Le, q(1, 1));
        let res = solve_lp(&lp).unwrap();
        assert_eq!(res.status, SolveStatus::Unbounded);
    }

    #[test]
    fn upper_bounds_and_shifted_lower_bounds() {
        // max x + 2y == min -x - 2y, 1 <= x <= 4, -1 <= y <= 2, x + y <= 5
        let mut lp = LinearProgram::<Rational>::new();
        let x = lp.add_var(q(-1, 1), q(1, 1), Some(q(4, 1)));
        let y = lp.add_var(q(-2, 1), q(-1, 1), Some(q(2, 1)));
        lp.add_constraint(vec![(x, q(1, 1)), (y, q(1, 1))], Relation::Le, q(5, 1));
        let res = solve_lp(&lp).unwrap();
        assert_eq!(res.solution, Some(vec![q(3, 1), q(2, 1)]));
        assert_eq!(res.objective, Some(q(-7, 1)));
        assert!(verify_optimality(&lp, &res));
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        // x + y = 1 twice, x - y = 0
        let mut lp = LinearProgram::<Rational>::new();
        let x = lp.add_var(q(1, 1), q(0, 1), None);
        let y = lp.add_var(q(3, 1), q(0, 1), None);
        lp.add_constraint(vec![(x, q(1, 1)), (y, q(1, 1))], Relation::Eq, q(1, 1));
        lp.add_constraint(vec![(x, q(2, 1)), (y, q(2, 1))], Relation::Eq, q(2, 1));
        lp.add_constraint(vec![(x, q(1, 1)), (y, q(-1, 1))], Relation::Eq, q(0, 1));
        let res = solve_lp(&lp).unwrap();
        assert_eq!(res.solution, Some(vec![q(1, 2), q(1, 2)]));
        assert!(verify_optimality(&lp, &res));
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's cycling example, solved with Bland's rule.
        let mut lp = LinearProgram::<Rational>::new();
        let x1 = lp.add_var(q(-3, 4), q(0, 1), None);
        let x2 = lp.add_var(q(150, 1), q(0, 1), None);
        let x3 = lp.add_var(q(-1, 50), q(0, 1), None);
        let x4 = lp.add_var(q(6, 1), q(0, 1), None);
        lp.add_constraint(
            vec![(x1, q(1, 4)), (x2, q(-60, 1)), (x3, q(-1, 25)), (x4, q(9, 1))],
            Relation::Le,
            q(0, 1),
        );
        lp.add_constraint(
            vec![(x1, q(1, 2)), (x2, q(-90, 1)), (x3, q(-1, 50)), (x4, q(3, 1))],
            Relation::Le,
            q(0, 1),
        );
        lp.add_constraint(vec![(x3, q(1, 1))], Relation::Le, q(1, 1));
        let res = solve_lp(&lp).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert_eq!(res.objective, Some(q(-1, 20)));
        assert!(verify_optimality(&lp, &res));
    }

    #[test]
    fn iteration_limit_is_reported() {
        let mut lp = LinearProgram::<Rational>::new();
        let x = lp.add_var(q(-1, 1), q(0, 1), None);
        let y = lp.add_var(q(-1, 1), q(0, 1), None);
        lp.add_constraint(vec![(x, q(1, 1)), (y, q(2, 1))], Relation::Le, q(4, 1));
        lp.add_constraint(vec![(x, q(3, 1)), (y, q(1, 1))], Relation::Le, q(6, 1));
        let res = solve_lp_with(&lp, &SimplexOptions { max_iterations: 1 }).unwrap();
        assert_eq!(res.status, SolveStatus::IterationLimit);
        assert!(res.solution.is_none());
    }
}
