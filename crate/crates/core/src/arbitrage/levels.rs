//! First-order minimization as a nested-knapsack branch and bound.
//!
//! Some optimal payoff takes grid values, `θ_i = x_{k(i)}`. With
//! `S_j = {i : k(i) <= j}` the dominance constraint reads `μ(S_j) <= F(x_j)`
//! for `j < n`, the sets are nested, and
//! `p(θ) = ν(Ω) x_n - Σ_j (x_{j+1} - x_j) ν(S_j)`.
//! Dropping nesting leaves one 0/1 knapsack per level (weights `μ`, values
//! `ν`), each solved exactly by depth-first search; their values bound every
//! node. Branching on an item that leaves a set on the way up splits the
//! domain of `k(i)`. Intersecting the knapsack sets from the top down always
//! gives a feasible payoff, which seeds the incumbent.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;

use sdarb_lp::{tol, Scalar, SolveStatus};

use crate::measures::MarketModel;

pub struct LevelOutcome<T> {
    pub status: SolveStatus,
    /// Grid index paid by each atom (optimal, or best found at the limit).
    pub levels: Option<Vec<usize>>,
    pub price: Option<T>,
    pub root_bound: T,
    pub nodes: usize,
}

struct Problem<'a, T> {
    mu: &'a [T],
    nu: &'a [T],
    atoms: &'a [T],
    capacity: Vec<T>,
    gaps: Vec<T>,
    top: T,
    /// Items by kernel value descending, ties by index.
    order: Vec<usize>,
}

/// Optimal knapsack at one level under a node's domains.
struct LevelSet<T> {
    value: T,
    members: Vec<bool>,
}

struct Node<T> {
    bound: T,
    depth: usize,
    seq: usize,
    lo: Vec<usize>,
    hi: Vec<usize>,
    sets: Vec<Rc<LevelSet<T>>>,
    branch: (usize, usize),
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
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(self.seq.cmp(&other.seq))
    }
}

/// Depth-first 0/1 knapsack over items sorted by value density.
struct Knapsack<'a, T> {
    weight: Vec<&'a T>,
    value: Vec<&'a T>,
    take: Vec<bool>,
    best: T,
    best_take: Vec<bool>,
}

impl<T: Scalar> Knapsack<'_, T> {
    /// Value of the fractional fill from item `k` on.
    fn fractional(&self, k: usize, room: &T) -> T {
        let mut room = room.clone();
        let mut total = T::zero();
        for (w, v) in self.weight[k..].iter().zip(&self.value[k..]) {
            if w.le_tol(&room, tol::COMPARE) {
                room -= *w;
                total += *v;
            } else {
                if room > T::zero() {
                    total += &((*v).clone() * &room / *w);
                }
                break;
            }
        }
        total
    }

    fn search(&mut self, k: usize, room: T, value: T) {
        if k == self.weight.len() {
            if self.best < value {
                self.best = value;
                self.best_take.clone_from(&self.take);
            }
            return;
        }
        let bound = value.clone() + self.fractional(k, &room);
        if !self.best.lt_tol(&bound, tol::COMPARE) {
            return;
        }
        if self.weight[k].le_tol(&room, tol::COMPARE) {
            self.take[k] = true;
            self.search(k + 1, room.clone() - self.weight[k], value.clone() + self.value[k]);
            self.take[k] = false;
        }
        self.search(k + 1, room, value);
    }
}

impl<T: Scalar> Problem<'_, T> {
    fn levels(&self) -> usize {
        self.gaps.len()
    }

    fn price_of(&self, k: &[usize]) -> T {
        k.iter().zip(self.nu).map(|(&k, nu)| nu.clone() * &self.atoms[k]).sum()
    }

    /// Best set at level `j` containing every item with `hi <= j` and drawn
    /// from items with `lo <= j`; `None` when the forced items overflow.
    fn level_set(&self, j: usize, lo: &[usize], hi: &[usize]) -> Option<LevelSet<T>> {
        let n = self.mu.len();
        let mut room = self.capacity[j].clone();
        let mut value = T::zero();
        let mut members = vec![false; n];
        for i in (0..n).filter(|&i| hi[i] <= j) {
            room -= &self.mu[i];
            value += &self.nu[i];
            members[i] = true;
        }
        if room.lt_tol(&T::zero(), tol::COMPARE) {
            return None;
        }
        let free: Vec<usize> = self
            .order
            .iter()
            .copied()
            .filter(|&i| hi[i] > j && lo[i] <= j)
            .collect();
        let mut ks = Knapsack {
            weight: free.iter().map(|&i| &self.mu[i]).collect(),
            value: free.iter().map(|&i| &self.nu[i]).collect(),
            take: vec![false; free.len()],
            best: T::zero(),
            best_take: vec![false; free.len()],
        };
        // Seed with the greedy fill so the search only looks for improvements.
        let mut greedy_room = room.clone();
        for (k, w) in ks.weight.iter().enumerate() {
            if w.le_tol(&greedy_room, tol::COMPARE) {
                greedy_room -= *w;
                ks.best += ks.value[k];
                ks.best_take[k] = true;
            }
        }
        ks.search(0, room, T::zero());
        for (k, &i) in free.iter().enumerate() {
            members[i] = ks.best_take[k];
        }
        Some(LevelSet {
            value: value + &ks.best,
            members,
        })
    }

    fn bound(&self, sets: &[Rc<LevelSet<T>>]) -> T {
        let weight: T = sets.iter().zip(&self.gaps).map(|(s, g)| g.clone() * &s.value).sum();
        self.top.clone() - weight
    }

    /// An item in `S_j` but not in `S_{j+1}`, if any.
    fn nesting_violation(&self, sets: &[Rc<LevelSet<T>>]) -> Option<(usize, usize)> {
        (0..self.mu.len()).find_map(|i| {
            (0..self.levels().saturating_sub(1))
                .find(|&j| sets[j].members[i] && !sets[j + 1].members[i])
                .map(|j| (i, j))
        })
    }

    /// Levels of the nested chain `S_j ∩ S_{j+1} ∩ ...`; always feasible.
    fn intersect(&self, sets: &[Rc<LevelSet<T>>]) -> Vec<usize> {
        let n = self.mu.len();
        let mut k = vec![self.levels(); n];
        let mut in_all = vec![true; n];
        for j in (0..self.levels()).rev() {
            for i in 0..n {
                in_all[i] = in_all[i] && sets[j].members[i];
                if in_all[i] {
                    k[i] = j;
                }
            }
        }
        k
    }
}

/// Whether item `i` has the same status at level `j` under both domains.
fn same_status(j: usize, lo: (usize, usize), hi: (usize, usize)) -> bool {
    let status = |lo: usize, hi: usize| {
        if j < lo {
            0
        } else if j < hi {
            1
        } else {
            2
        }
    };
    status(lo.0, hi.0) == status(lo.1, hi.1)
}

pub fn solve<T: Scalar>(m: &MarketModel<T>, max_nodes: usize) -> LevelOutcome<T> {
    let n = m.len();
    let atoms = m.atoms();
    let mut capacity = m.objective_measure().cumulative();
    capacity.pop();
    let gaps: Vec<T> = atoms.windows(2).map(|w| w[1].clone() - &w[0]).collect();
    let nu_total: T = m.nu().iter().cloned().sum();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m.kernel()[b].total_cmp(&m.kernel()[a]).then(a.cmp(&b)));
    let problem = Problem {
        mu: m.mu(),
        nu: m.nu(),
        atoms,
        capacity,
        gaps,
        top: nu_total * &atoms[n - 1],
        order,
    };

    let identity: Vec<usize> = (0..n).collect();
    let mut incumbent = (problem.price_of(&identity), identity);
    let offer = |levels: Vec<usize>, best: &mut (T, Vec<usize>)| {
        let price = problem.price_of(&levels);
        if price < best.0 {
            *best = (price, levels);
        }
    };

    let lo = vec![0usize; n];
    let hi = vec![n - 1; n];
    let sets: Vec<Rc<LevelSet<T>>> = (0..problem.levels())
        .map(|j| Rc::new(problem.level_set(j, &lo, &hi).expect("the identity payoff is feasible")))
        .collect();
    let root_bound = problem.bound(&sets);
    let mut nodes = 1usize;
    let mut seq = 0usize;
    let mut heap = BinaryHeap::new();
    let mut admit = |lo: Vec<usize>,
                     hi: Vec<usize>,
                     sets: Vec<Rc<LevelSet<T>>>,
                     depth: usize,
                     heap: &mut BinaryHeap<Node<T>>,
                     best: &mut (T, Vec<usize>)| {
        let bound = problem.bound(&sets);
        offer(problem.intersect(&sets), best);
        if !bound.lt_tol(&best.0, tol::COMPARE) {
            return;
        }
        match problem.nesting_violation(&sets) {
            // Nested: the chain itself attains the bound and was offered above.
            None => {}
            Some(branch) => {
                seq += 1;
                heap.push(Node {
                    bound,
                    depth,
                    seq,
                    lo,
                    hi,
                    sets,
                    branch,
                });
            }
        }
    };
    admit(lo, hi, sets, 0, &mut heap, &mut incumbent);

    let mut hit_limit = false;
    'search: while let Some(node) = heap.pop() {
        if !node.bound.lt_tol(&incumbent.0, tol::COMPARE) {
            break;
        }
        let (i, j) = node.branch;
        for (new_lo, new_hi) in [(node.lo[i], j), (j + 1, node.hi[i])] {
            if nodes >= max_nodes {
                hit_limit = true;
                break 'search;
            }
            nodes += 1;
            let mut lo = node.lo.clone();
            let mut hi = node.hi.clone();
            lo[i] = new_lo;
            hi[i] = new_hi;
            let mut sets = Vec::with_capacity(node.sets.len());
            let mut feasible = true;
            for (l, set) in node.sets.iter().enumerate() {
                let unchanged = same_status(l, (node.lo[i], new_lo), (node.hi[i], new_hi));
                // A parent optimum that already obeys the new domain stays optimal.
                let obeys = set.members[i] == (l >= new_hi) || (l >= new_lo && l < new_hi);
                if unchanged || obeys {
                    sets.push(Rc::clone(set));
                } else if let Some(s) = problem.level_set(l, &lo, &hi) {
                    sets.push(Rc::new(s));
                } else {
                    feasible = false;
                    break;
                }
            }
            if feasible {
                admit(lo, hi, sets, node.depth + 1, &mut heap, &mut incumbent);
            }
        }
    }
    let (price, levels) = incumbent;
    LevelOutcome {
        status: if hit_limit {
            SolveStatus::NodeLimit
        } else {
            SolveStatus::Optimal
        },
        levels: Some(levels),
        price: Some(price),
        root_bound,
        nodes,
    }
}
