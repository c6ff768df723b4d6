use proptest::prelude::*;
use sdarb_lp::{
    solve_lp, solve_milp, verify_optimality, LinearProgram, MixedIntegerProgram, Rational, Relation, Scalar,
    SolveStatus,
};

fn r(n: i64) -> Rational {
    Rational::from_i64(n)
}

fn relation(k: u8) -> Relation {
    match k % 3 {
        0 => Relation::Le,
        1 => Relation::Ge,
        _ => Relation::Eq,
    }
}

type Row = (Vec<i64>, u8, i64);

/// Small integer program data: costs, rows (coefficients, relation, rhs), box.
fn program(nvars: usize, max_rows: usize) -> impl Strategy<Value = (Vec<i64>, Vec<Row>)> {
    let costs = prop::collection::vec(-5i64..=5, nvars);
    let row = (prop::collection::vec(-4i64..=4, nvars), 0u8..3, -6i64..=12);
    (costs, prop::collection::vec(row, 1..=max_rows))
}

fn build<T: Scalar>(costs: &[i64], rows: &[Row], upper: i64) -> LinearProgram<T> {
    let mut lp = LinearProgram::new();
    for &c in costs {
        lp.add_var(T::from_i64(c), T::zero(), Some(T::from_i64(upper)));
    }
    for (coef, rel, rhs) in rows {
        let terms = coef.iter().enumerate().map(|(j, &a)| (j, T::from_i64(a))).collect();
        lp.add_constraint(terms, relation(*rel), T::from_i64(*rhs));
    }
    lp
}

/// Best vertex of a bounded two-variable program, by intersecting every pair
/// of constraint and bound lines; `None` when nothing is feasible.
fn vertex_oracle(lp: &LinearProgram<Rational>) -> Option<Rational> {
    let mut lines: Vec<([Rational; 2], Rational)> = Vec::new();
    for row in &lp.constraints {
        let mut a = [r(0), r(0)];
        for (j, v) in &row.terms {
            a[*j] += v;
        }
        lines.push((a, row.rhs.clone()));
    }
    for j in 0..2 {
        let mut a = [r(0), r(0)];
        a[j] = r(1);
        lines.push((a.clone(), lp.lower[j].clone()));
        lines.push((a, lp.upper[j].clone().unwrap()));
    }
    let mut best: Option<Rational> = None;
    for (i, (a, b)) in lines.iter().enumerate() {
        for (c, d) in &lines[i + 1..] {
            let det = a[0].clone() * &c[1] - a[1].clone() * &c[0];
            if det == r(0) {
                continue;
            }
            let x = (b.clone() * &c[1] - a[1].clone() * d) / &det;
            let y = (a[0].clone() * d - b.clone() * &c[0]) / &det;
            let point = [x, y];
            if lp.is_feasible(&point, 0.0) {
                let value = lp.objective_value(&point);
                if best.as_ref().is_none_or(|v| value < *v) {
                    best = Some(value);
                }
            }
        }
    }
    best
}

/// Minimum over all 0/1 points; `None` when none is feasible.
fn binary_oracle(lp: &LinearProgram<Rational>) -> Option<Rational> {
    let n = lp.num_vars();
    (0u32..1 << n)
        .map(|mask| (0..n).map(|j| r(((mask >> j) & 1) as i64)).collect::<Vec<_>>())
        .filter(|x| lp.is_feasible(x, 0.0))
        .map(|x| lp.objective_value(&x))
        .min()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn single_lower_bound() {
    let mut lp = LinearProgram::<Rational>::new();
    let x = lp.add_var(r(1), r(0), None);
    lp.add_constraint(vec![(x, r(1))], Relation::Ge, r(3));
    let res = solve_lp(&lp).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    assert_eq!(res.objective, Some(r(3)));
    assert_eq!(res.solution, Some(vec![r(3)]));
    assert!(verify_optimality(&lp, &res));
}

#[test]
fn equality_with_inequality() {
    // min x + y, x + y >= 2, x - y = 0
    let mut lp = LinearProgram::<f64>::new();
    let x = lp.add_var(1.0, 0.0, None);
    let y = lp.add_var(1.0, 0.0, None);
    lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Ge, 2.0);
    lp.add_constraint(vec![(x, 1.0), (y, -1.0)], Relation::Eq, 0.0);
    let res = solve_lp(&lp).unwrap();
    let sol = res.solution.unwrap();
    assert!((sol[0] - 1.0).abs() < 1e-12 && (sol[1] - 1.0).abs() < 1e-12);
    assert!((res.objective.unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn binary_rounds_up() {
    let mut lp = LinearProgram::<Rational>::new();
    let x = lp.add_var(r(1), r(0), Some(r(1)));
    lp.add_constraint(vec![(x, r(1))], Relation::Ge, Rational::from_ratio(3, 10));
    let res = solve_milp(&MixedIntegerProgram::new(lp, vec![x])).unwrap();
    assert_eq!(res.solution, Some(vec![r(1)]));
    assert_eq!(res.objective, Some(r(1)));
}

#[test]
fn unbounded_and_infeasible() {
    let mut lp = LinearProgram::<Rational>::new();
    let x = lp.add_var(r(-1), r(0), None);
    lp.add_constraint(vec![(x, r(1))], Relation::Ge, r(1));
    assert_eq!(solve_lp(&lp).unwrap().status, SolveStatus::Unbounded);
    lp.add_constraint(vec![(x, r(1))], Relation::Le, r(0));
    assert_eq!(solve_lp(&lp).unwrap().status, SolveStatus::Infeasible);
}

#[test]
fn assignment_matches_permutation_enumeration() {
    let costs = [[4i64, 1, 3, 7], [2, 0, 5, 1], [3, 2, 2, 6], [5, 4, 1, 3]];
    for n in 1..=4 {
        let mut lp = LinearProgram::<Rational>::new();
        let var = |i: usize, j: usize| i * n + j;
        for row in &costs[..n] {
            for &c in &row[..n] {
                lp.add_var(r(c), r(0), Some(r(1)));
            }
        }
        for i in 0..n {
            lp.add_constraint((0..n).map(|j| (var(i, j), r(1))).collect(), Relation::Eq, r(1));
            lp.add_constraint((0..n).map(|j| (var(j, i), r(1))).collect(), Relation::Eq, r(1));
        }
        let res = solve_lp(&lp).unwrap();
        let best = permutations(n)
            .iter()
            .map(|p| (0..n).map(|i| costs[i][p[i]]).sum::<i64>())
            .min()
            .unwrap();
        assert_eq!(res.objective, Some(r(best)), "n={n}");
        assert!(verify_optimality(&lp, &res));
    }
}

#[test]
fn text_dump_lists_rows_and_binaries() {
    let mut lp = LinearProgram::<Rational>::new();
    let x = lp.add_var(Rational::from_ratio(1, 3), r(0), Some(r(1)));
    lp.add_constraint(vec![(x, r(2))], Relation::Le, Rational::from_ratio(3, 2));
    let text = MixedIntegerProgram::new(lp, vec![x]).to_text();
    assert!(text.contains("1/3"), "{text}");
    assert!(text.contains("3/2"), "{text}");
    assert!(text.contains("<="), "{text}");
}

proptest! {
    #[test]
    fn two_variable_lp_matches_vertex_enumeration((costs, rows) in program(2, 4)) {
        let lp = build::<Rational>(&costs, &rows, 6);
        let res = solve_lp(&lp).unwrap();
        match vertex_oracle(&lp) {
            Some(best) => {
                prop_assert_eq!(res.status, SolveStatus::Optimal);
                prop_assert_eq!(res.objective.clone(), Some(best));
                prop_assert!(verify_optimality(&lp, &res));
            }
            None => prop_assert_eq!(res.status, SolveStatus::Infeasible),
        }
    }

    #[test]
    fn float_mode_agrees_with_exact((costs, rows) in program(3, 4)) {
        let exact = solve_lp(&build::<Rational>(&costs, &rows, 5)).unwrap();
        let float = solve_lp(&build::<f64>(&costs, &rows, 5)).unwrap();
        prop_assert_eq!(exact.status, float.status);
        if let (Some(a), Some(b)) = (exact.objective, float.objective) {
            prop_assert!((a.to_f64() - b).abs() <= 1e-8 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn binary_program_matches_enumeration((costs, rows) in program(5, 3)) {
        let lp = build::<Rational>(&costs, &rows, 1);
        let relaxation = solve_lp(&lp).unwrap();
        let res = solve_milp(&MixedIntegerProgram::new(lp.clone(), (0..5).collect())).unwrap();
        match binary_oracle(&lp) {
            Some(best) => {
                prop_assert_eq!(res.status, SolveStatus::Optimal);
                prop_assert_eq!(res.objective.clone(), Some(best.clone()));
                prop_assert!(relaxation.objective.unwrap() <= best);
                prop_assert!(res.root_bound.unwrap() <= best);
            }
            None => prop_assert_eq!(res.status, SolveStatus::Infeasible),
        }
    }
}
