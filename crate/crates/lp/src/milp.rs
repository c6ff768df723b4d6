//! Best-first branch and bound over binary variables.
//!
//! Each node fixes a subset of binaries and solves the LP relaxation with the
//! simplex in [`crate::simplex`]. The open node with the smallest relaxation
//! bound is expanded next; equal bounds go to the deeper node. The branching
//! variable is the most fractional binary, lowest index on ties.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::program::{MixedIntegerProgram, OptResult, ProgramError, SolveStatus};
use crate::scalar::{tol, Scalar};
use crate::simplex::{solve_lp_with, SimplexOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MilpOptions {
    pub max_nodes: usize,
    pub simplex: SimplexOptions,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            max_nodes: 100_000,
            simplex: SimplexOptions::default(),
        }
    }
}

pub fn solve_milp<T: Scalar>(p: &MixedIntegerProgram<T>) -> Result<OptResult<T>, ProgramError> {
    solve_milp_with(p, &MilpOptions::default())
}

struct Node<T> {
    bound: T,
    depth: usize,
    seq: usize,
    fixings: Vec<(usize, bool)>,
    solution: Vec<T>,
}

impl<T: Scalar> PartialEq for Node<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Node<T> {}

impl<T: Scalar> PartialOrd for Node<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Node<T> {
    // BinaryHeap is a max-heap: "greater" means "expand first".
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(self.seq.cmp(&other.seq))
    }
}

fn fractionality<T: Scalar>(v: &T) -> T {
    let one_minus = T::one() - v;
    T::min_of(v.clone(), one_minus)
}

/// Most fractional binary, lowest index on ties; `None` when all are integral.
fn branching_variable<T: Scalar>(binaries: &[usize], x: &[T]) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    let mut sorted = binaries.to_vec();
    sorted.sort_unstable();
    for j in sorted {
        let frac = fractionality(&x[j]);
        if frac.is_zero_tol(tol::INTEGRALITY) {
            continue;
        }
        if best.as_ref().is_none_or(|(_, f)| frac > *f) {
            best = Some((j, frac));
        }
    }
    best.map(|(j, _)| j)
}

pub fn solve_milp_with<T: Scalar>(
    p: &MixedIntegerProgram<T>,
    options: &MilpOptions,
) -> Result<OptResult<T>, ProgramError> {
    p.validate()?;
    let mut iterations = 0usize;
    let mut nodes = 0usize;
    let mut seq = 0usize;

    let relax = |fixings: &[(usize, bool)], iterations: &mut usize| -> Result<OptResult<T>, ProgramError> {
        let mut lp = p.lp.clone();
        for &(j, one) in fixings {
            let v = if one { T::one() } else { T::zero() };
            lp.lower[j] = v.clone();
            lp.upper[j] = Some(v);
        }
        let res = solve_lp_with(&lp, &options.simplex)?;
        *iterations += res.iterations;
        Ok(res)
    };

    let root = relax(&[], &mut iterations)?;
    nodes += 1;
    match root.status {
        SolveStatus::Optimal => {}
        status => {
            let mut out = OptResult::failed(status, iterations);
            out.nodes = nodes;
            return Ok(out);
        }
    }
    let root_bound = root.objective.clone().expect("optimal root has objective");

    let mut incumbent: Option<(T, Vec<T>)> = None;
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: root_bound.clone(),
        depth: 0,
        seq,
        fixings: Vec::new(),
        solution: root.solution.expect("optimal root has solution"),
    });

    let prunable = |bound: &T, incumbent: &Option<(T, Vec<T>)>| {
        incumbent
            .as_ref()
            .is_some_and(|(best, _)| !bound.lt_tol(best, tol::COMPARE))
    };

    let mut hit_limit = false;
    while let Some(node) = heap.pop() {
        if prunable(&node.bound, &incumbent) {
            break;
        }
        let Some(j) = branching_variable(&p.binaries, &node.solution) else {
            // Integral relaxation: round binaries to exactly 0/1.
            let mut x = node.solution;
            for &b in &p.binaries {
                x[b] = if x[b] > T::from_ratio(1, 2) {
                    T::one()
                } else {
                    T::zero()
                };
            }
            let value = p.lp.objective_value(&x);
            if incumbent.as_ref().is_none_or(|(best, _)| value < *best) {
                incumbent = Some((value, x));
            }
            continue;
        };
        for one in [false, true] {
            if nodes >= options.max_nodes {
                hit_limit = true;
                break;
            }
            let mut fixings = node.fixings.clone();
            fixings.push((j, one));
            let res = relax(&fixings, &mut iterations)?;
            nodes += 1;
            match res.status {
                SolveStatus::Optimal => {}
                SolveStatus::Infeasible => continue,
                SolveStatus::Unbounded => unreachable!("child of a bounded relaxation is bounded"),
                SolveStatus::IterationLimit | SolveStatus::NodeLimit => {
                    let mut out = OptResult::failed(SolveStatus::IterationLimit, iterations);
                    out.nodes = nodes;
                    out.root_bound = Some(root_bound);
                    out.incumbent = incumbent.map(|(_, x)| x);
                    return Ok(out);
                }
            }
            let bound = res.objective.expect("objective");
            if prunable(&bound, &incumbent) {
                continue;
            }
            seq += 1;
            heap.push(Node {
                bound,
                depth: node.depth + 1,
                seq,
                fixings,
                solution: res.solution.expect("solution"),
            });
        }
        if hit_limit {
            break;
        }
    }

    if hit_limit {
        let mut out = OptResult::failed(SolveStatus::NodeLimit, iterations);
        out.nodes = nodes;
        out.root_bound = Some(root_bound);
        out.incumbent = incumbent.map(|(_, x)| x);
        return Ok(out);
    }
    match incumbent {
        Some((value, x)) => {
            debug_assert!(root_bound.le_tol(&value, tol::COMPARE), "relaxation above MILP optimum");
            Ok(OptResult {
                status: SolveStatus::Optimal,
                solution: Some(x),
                objective: Some(value),
                duals: None,
                iterations,
                nodes,
                root_bound: Some(root_bound),
                incumbent: None,
            })
        }
        None => {
            let mut out = OptResult::failed(SolveStatus::Infeasible, iterations);
            out.nodes = nodes;
            out.root_bound = Some(root_bound);
            Ok(out)
        }
    }
}
