//! Direct LP/MILP formulations of the four constrained minimizations.

use sdarb_lp::tol;
use sdarb_lp::{
    solve_lp_with, solve_milp_with, LinearProgram, MixedIntegerProgram, OptResult, ProgramError, Relation, Scalar,
};

use super::MinPriceOptions;
use crate::measures::MarketModel;
use crate::orders::OrderRelation;

/// A built program plus the map from its solution to the payoff vector.
pub struct Built<T> {
    pub program: MixedIntegerProgram<T>,
    /// Payoff of atom `i` is `Σ_k coef * x[var]` over `payoff_terms[i]`.
    pub payoff_terms: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> Built<T> {
    pub fn payoff(&self, x: &[T]) -> Vec<T> {
        self.payoff_terms
            .iter()
            .map(|terms| terms.iter().map(|(j, c)| c.clone() * &x[*j]).sum())
            .collect()
    }

    pub fn is_lp(&self) -> bool {
        self.program.binaries.is_empty()
    }
}

fn payoff_vars<T: Scalar>(lp: &mut LinearProgram<T>, m: &MarketModel<T>, lower: T, cap: &T) -> Vec<usize> {
    m.nu()
        .iter()
        .map(|nu| lp.add_var(nu.clone(), lower.clone(), Some(cap.clone())))
        .collect()
}

fn identity_terms<T: Scalar>(theta: &[usize]) -> Vec<Vec<(usize, T)>> {
    theta.iter().map(|&j| vec![(j, T::one())]).collect()
}

/// Shortfall form: `s_ij >= x_j - θ_i`, `s_ij >= 0`, `Σ_i μ_i s_ij <= E[(x_j - X)_+]`.
fn second_order<T: Scalar>(m: &MarketModel<T>, cap: &T, mean_preserving: bool) -> Built<T> {
    let n = m.len();
    let mut lp = LinearProgram::new();
    let theta = payoff_vars(&mut lp, m, T::zero(), cap);
    let benchmark = m.objective_measure();
    for t in m.atoms() {
        let s: Vec<usize> = (0..n).map(|_| lp.add_var(T::zero(), T::zero(), None)).collect();
        for i in 0..n {
            lp.add_constraint(vec![(s[i], T::one()), (theta[i], T::one())], Relation::Ge, t.clone());
        }
        lp.add_constraint(
            s.iter().zip(m.mu()).map(|(&v, mu)| (v, mu.clone())).collect(),
            Relation::Le,
            benchmark.shortfall(t),
        );
    }
    if mean_preserving {
        lp.add_constraint(
            theta.iter().zip(m.mu()).map(|(&v, mu)| (v, mu.clone())).collect(),
            Relation::Eq,
            benchmark.mean(),
        );
    }
    Built {
        payoff_terms: identity_terms(&theta),
        program: MixedIntegerProgram::new(lp, Vec::new()),
    }
}

/// Big-M form: `θ_i >= x_{j+1} - M c_ij`, `Σ_i μ_i c_ij <= F(x_j)`, `θ_i >= x_1`.
fn first_order<T: Scalar>(m: &MarketModel<T>, cap: &T) -> Built<T> {
    let n = m.len();
    let atoms = m.atoms();
    let big_m = atoms[n - 1].clone() - &atoms[0];
    let cumulative = m.objective_measure().cumulative();
    let mut lp = LinearProgram::new();
    let theta = payoff_vars(&mut lp, m, atoms[0].clone(), cap);
    let mut binaries = Vec::new();
    for j in 0..n.saturating_sub(1) {
        let c: Vec<usize> = (0..n)
            .map(|_| lp.add_var(T::zero(), T::zero(), Some(T::one())))
            .collect();
        for i in 0..n {
            lp.add_constraint(
                vec![(theta[i], T::one()), (c[i], big_m.clone())],
                Relation::Ge,
                atoms[j + 1].clone(),
            );
        }
        lp.add_constraint(
            c.iter().zip(m.mu()).map(|(&v, mu)| (v, mu.clone())).collect(),
            Relation::Le,
            cumulative[j].clone(),
        );
        binaries.extend(c);
    }
    Built {
        payoff_terms: identity_terms(&theta),
        program: MixedIntegerProgram::new(lp, binaries),
    }
}

/// Assignment form: `a_ik = 1` when atom `i` pays `x_k`. Pairs with
/// `μ_i > μ_k` can never be used (the mass arriving at `x_k` would exceed
/// `μ_k`), so those variables are left out.
fn equal<T: Scalar>(m: &MarketModel<T>) -> Built<T> {
    let n = m.len();
    let atoms = m.atoms();
    let mu = m.mu();
    let mut lp = LinearProgram::new();
    let mut column: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut payoff_terms = Vec::with_capacity(n);
    let mut binaries = Vec::new();
    for i in 0..n {
        let mut row = Vec::new();
        let mut terms = Vec::new();
        for k in (0..n).filter(|&k| mu[i].le_tol(&mu[k], tol::COMPARE)) {
            let v = lp.add_var(m.nu()[i].clone() * &atoms[k], T::zero(), Some(T::one()));
            row.push((v, T::one()));
            terms.push((v, atoms[k].clone()));
            column[k].push((v, i));
            binaries.push(v);
        }
        lp.add_constraint(row, Relation::Eq, T::one());
        payoff_terms.push(terms);
    }
    for (k, col) in column.iter().enumerate() {
        lp.add_constraint(
            col.iter().map(|&(v, i)| (v, mu[i].clone())).collect(),
            Relation::Eq,
            mu[k].clone(),
        );
    }
    Built {
        program: MixedIntegerProgram::new(lp, binaries),
        payoff_terms,
    }
}

pub fn build<T: Scalar>(m: &MarketModel<T>, rel: OrderRelation, cap: &T) -> Built<T> {
    match rel {
        OrderRelation::Equal => equal(m),
        OrderRelation::FirstOrder => first_order(m, cap),
        OrderRelation::Concave => second_order(m, cap, true),
        OrderRelation::SecondOrder => second_order(m, cap, false),
    }
}

pub fn solve<T: Scalar>(built: &Built<T>, options: &MinPriceOptions) -> Result<OptResult<T>, ProgramError> {
    if built.is_lp() {
        solve_lp_with(&built.program.lp, &options.milp.simplex)
    } else {
        solve_milp_with(&built.program, &options.milp)
    }
}
