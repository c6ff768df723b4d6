//! The optimal measure preserving derivative on a discrete grid.
//!
//! For atom `x_i` with kernel value `π_i` the payoff is
//! `ϑ_i = Q(μ{π > π_i} + μ{j <= i : π_j = π_i})`, i.e. the quantile function of
//! `μ` evaluated at the position of `x_i` in the ordering of atoms by kernel
//! value (descending), ties kept in grid order. High kernel values (expensive
//! states) thus receive the low market quantiles.

use sdarb_lp::{tol, Scalar};

use crate::measures::{MarketModel, PayoffProfile};
use crate::orders::same_distribution;
use crate::rearrangement::{dybvig_bound, is_countermonotone};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OmpdOptions {
    /// Treat kernel values within this relative tolerance as tied (float mode
    /// only). `None` means exact equality.
    pub kernel_tolerance: Option<f64>,
}

fn tied<T: Scalar>(a: &T, b: &T, options: &OmpdOptions) -> bool {
    match options.kernel_tolerance {
        Some(eps) => a.eq_tol(b, eps),
        None => a == b,
    }
}

pub fn ompd<T: Scalar>(m: &MarketModel<T>) -> PayoffProfile<T> {
    ompd_with(m, &OmpdOptions::default())
}

pub fn ompd_with<T: Scalar>(m: &MarketModel<T>, options: &OmpdOptions) -> PayoffProfile<T> {
    let pi = m.kernel();
    let mu = m.mu();
    let atoms = m.atoms();
    let cumulative = m.objective_measure().cumulative();
    let values = (0..m.len())
        .map(|i| {
            let mut level = T::zero();
            for j in 0..m.len() {
                let same = tied(&pi[j], &pi[i], options);
                if (same && j <= i) || (!same && pi[j] > pi[i]) {
                    level += &mu[j];
                }
            }
            // Q(u) = first atom whose cumulative mass reaches u; in float mode
            // a level within KERNEL of a cumulative mass counts as reaching it.
            let k = cumulative
                .iter()
                .position(|c| !c.lt_tol(&level, tol::KERNEL))
                .unwrap_or(m.len() - 1);
            atoms[k].clone()
        })
        .collect();
    PayoffProfile::new(values).expect("atoms are nonnegative")
}

pub fn ompd_price<T: Scalar>(m: &MarketModel<T>) -> T {
    m.price(&ompd(m)).expect("profile matches grid")
}

/// Properties the derivative must satisfy on a given model.
#[derive(Debug, Clone, PartialEq)]
pub struct OmpdReport<T> {
    pub theta: PayoffProfile<T>,
    pub price: T,
    pub dybvig_bound: T,
    pub adequate: bool,
    /// Always expected.
    pub countermonotone: bool,
    /// Expected under adequacy.
    pub distribution_preserved: bool,
    /// Expected under adequacy.
    pub price_equals_dybvig: bool,
}

impl<T: Scalar> OmpdReport<T> {
    /// Whether every expectation that applies to this model is met.
    pub fn is_consistent(&self) -> bool {
        self.countermonotone && (!self.adequate || (self.distribution_preserved && self.price_equals_dybvig))
    }
}

pub fn verify_ompd_contract<T: Scalar>(m: &MarketModel<T>) -> OmpdReport<T> {
    let theta = ompd(m);
    let price = m.price(&theta).expect("profile matches grid");
    let bound = dybvig_bound(m);
    let pushed = m.pushforward(&theta).expect("profile matches grid");
    OmpdReport {
        countermonotone: is_countermonotone(m, theta.values(), m.kernel()).expect("lengths match"),
        distribution_preserved: same_distribution(&pushed, &m.objective_measure()),
        price_equals_dybvig: price.eq_tol(&bound, tol::COMPARE),
        adequate: m.is_adequate(),
        dybvig_bound: bound,
        price,
        theta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::new_market;
    use proptest::prelude::*;
    use sdarb_lp::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn example1() -> MarketModel<Rational> {
        new_market(vec![q(1, 1), q(2, 1)], vec![q(2, 3), q(1, 3)], vec![q(1, 3), q(2, 3)]).unwrap()
    }

    fn example2() -> MarketModel<Rational> {
        new_market(vec![q(1, 1), q(2, 1)], vec![q(1, 3), q(2, 3)], vec![q(1, 5), q(4, 5)]).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(ompd(&example1()).values(), &[q(2, 1), q(1, 1)]);
        assert_eq!(ompd_price(&example1()), q(4, 3));
        assert_eq!(ompd(&example2()).values(), &[q(2, 1), q(2, 1)]);
        assert_eq!(ompd_price(&example2()), q(2, 1));
    }

    #[test]
    fn constant_kernel_gives_identity() {
        let mu = vec![q(1, 6), q(1, 2), q(1, 3)];
        let m = new_market(vec![q(0, 1), q(3, 2), q(4, 1)], mu.clone(), mu).unwrap();
        assert_eq!(ompd(&m), m.identity());
        assert_eq!(ompd_price(&m), m.market_price());
        let r = verify_ompd_contract(&m);
        assert!(r.countermonotone && r.distribution_preserved && r.price_equals_dybvig);
    }

    #[test]
    fn contract_on_example1() {
        let r = verify_ompd_contract(&example1());
        assert!(r.countermonotone);
        assert!(!r.distribution_preserved);
        assert!(!r.adequate);
        assert!(r.is_consistent());
    }

    #[test]
    fn float_ties_opt_in() {
        // Kernel values 1 and 1 + 2^-52.
        let m = new_market(
            vec![1.0, 2.0, 3.0],
            vec![0.5, 0.25, 0.25],
            vec![0.5, 0.25 + f64::EPSILON / 4.0, 0.75],
        )
        .unwrap();
        assert_eq!(m.kernel(), &[1.0, 1.0 + f64::EPSILON, 3.0]);
        assert_eq!(ompd(&m).values(), &[3.0, 1.0, 1.0]);
        let loose = ompd_with(
            &m,
            &OmpdOptions {
                kernel_tolerance: Some(1e-12),
            },
        );
        assert_eq!(loose.values(), &[2.0, 3.0, 1.0]);
    }

    /// Oracle for equal masses: sort atoms by kernel value descending, ties by
    /// grid order, and hand out the atoms in increasing order.
    fn sorted_assignment(m: &MarketModel<Rational>) -> Vec<Rational> {
        let mut order: Vec<usize> = (0..m.len()).collect();
        order.sort_by(|&a, &b| m.kernel()[b].cmp(&m.kernel()[a]).then(a.cmp(&b)));
        let mut out = vec![q(0, 1); m.len()];
        for (rank, &i) in order.iter().enumerate() {
            out[i] = m.atoms()[rank].clone();
        }
        out
    }

    fn arb_model(equal: bool) -> impl Strategy<Value = MarketModel<Rational>> {
        (1usize..8)
            .prop_flat_map(|n| {
                (
                    prop::collection::btree_set(0i64..30, n),
                    prop::collection::vec(1i64..10, n),
                    prop::collection::vec(1i64..6, n),
                )
            })
            .prop_map(move |(atoms, w, k)| {
                let n = atoms.len();
                let w: Vec<i64> = if equal { vec![1; n] } else { w[..n].to_vec() };
                let total: i64 = w.iter().sum();
                let mu: Vec<Rational> = w.iter().map(|&x| q(x, total)).collect();
                let nu = mu.iter().zip(&k).map(|(m, &k)| m.clone() * q(k, 5)).collect();
                new_market(atoms.into_iter().map(|a| q(a, 1)).collect(), mu, nu).unwrap()
            })
    }

    proptest! {
        #[test]
        fn always_countermonotone(m in arb_model(false)) {
            let r = verify_ompd_contract(&m);
            prop_assert!(r.countermonotone);
            prop_assert!(r.is_consistent());
        }

        #[test]
        fn equal_masses_permute_atoms(m in arb_model(true)) {
            let r = verify_ompd_contract(&m);
            prop_assert!(r.distribution_preserved);
            prop_assert!(r.price_equals_dybvig);
            let oracle = sorted_assignment(&m);
            prop_assert_eq!(r.theta.values(), oracle.as_slice());
        }

        #[test]
        fn float_mode_matches_rational(m in arb_model(false)) {
            let theta = ompd(&m);
            let float = ompd_with(&m.to_float(), &OmpdOptions { kernel_tolerance: Some(tol::KERNEL) });
            for (a, b) in theta.values().iter().zip(float.values()) {
                prop_assert!((a.to_f64() - b).abs() <= 1e-12);
            }
        }
    }
}
