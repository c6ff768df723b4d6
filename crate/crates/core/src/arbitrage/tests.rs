use super::*;
use crate::measures::new_market;
use crate::orders::{dominates_fsd, dominates_ssd, same_distribution, SsdMethod};
use proptest::prelude::*;
use sdarb_lp::{verify_optimality, Rational};

fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn example1() -> MarketModel<Rational> {
    new_market(vec![q(1, 1), q(2, 1)], vec![q(2, 3), q(1, 3)], vec![q(1, 3), q(2, 3)]).unwrap()
}

fn example2() -> MarketModel<Rational> {
    new_market(vec![q(1, 1), q(2, 1)], vec![q(1, 3), q(2, 3)], vec![q(1, 5), q(4, 5)]).unwrap()
}

fn with(formulation: Formulation) -> MinPriceOptions {
    MinPriceOptions {
        formulation,
        ..MinPriceOptions::default()
    }
}

fn price(m: &MarketModel<Rational>, rel: OrderRelation, f: Formulation) -> Rational {
    min_price_with(m, rel, &with(f))
        .unwrap()
        .optimal_price()
        .unwrap()
        .clone()
}

/// Minimum price over all payoffs with values in `values`, by enumeration.
fn enumerate_min(m: &MarketModel<Rational>, values: &[Rational], rel: OrderRelation) -> Option<Rational> {
    let n = m.len();
    let mu = m.objective_measure();
    let mut idx = vec![0usize; n];
    let mut best: Option<Rational> = None;
    loop {
        let theta: Vec<Rational> = idx.iter().map(|&k| values[k].clone()).collect();
        let d = mu.map_values(&theta).unwrap();
        if rel.holds(&d, &mu) {
            let p = m.price_values(&theta).unwrap();
            if best.as_ref().is_none_or(|b| p < *b) {
                best = Some(p);
            }
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return best;
            }
            idx[pos] += 1;
            if idx[pos] < values.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

fn grid(top: i64, steps: i64) -> Vec<Rational> {
    (0..=top * steps).map(|k| q(k, steps)).collect()
}

#[test]
fn example1_minima() {
    let m = example1();
    for f in [Formulation::Explicit, Formulation::Compact] {
        assert_eq!(price(&m, OrderRelation::Equal, f), q(5, 3));
        assert_eq!(price(&m, OrderRelation::FirstOrder, f), q(4, 3));
        assert_eq!(price(&m, OrderRelation::SecondOrder, f), q(7, 6));
        assert_eq!(price(&m, OrderRelation::Concave, f), q(7, 6));
        let ssd = min_price_with(&m, OrderRelation::SecondOrder, &with(f)).unwrap();
        assert_eq!(ssd.theta.unwrap().values(), &[q(3, 2), q(1, 1)]);
        let fsd = min_price_with(&m, OrderRelation::FirstOrder, &with(f)).unwrap();
        assert_eq!(fsd.theta.unwrap().values(), &[q(2, 1), q(1, 1)]);
    }
    assert!(!has_stochastic_arbitrage(&m, OrderRelation::Equal).unwrap());
    assert!(has_stochastic_arbitrage(&m, OrderRelation::FirstOrder).unwrap());
    assert_eq!(ssd_lower_bound(&m), q(7, 6));
}

#[test]
fn example2_minima() {
    let m = example2();
    for f in [Formulation::Explicit, Formulation::Compact] {
        assert_eq!(price(&m, OrderRelation::Equal, f), q(9, 5));
        assert_eq!(price(&m, OrderRelation::FirstOrder, f), q(9, 5));
        assert_eq!(price(&m, OrderRelation::SecondOrder, f), q(8, 5));
        assert_eq!(price(&m, OrderRelation::Concave, f), q(8, 5));
        let ssd = min_price_with(&m, OrderRelation::SecondOrder, &with(f)).unwrap();
        assert_eq!(ssd.theta.unwrap().values(), &[q(2, 1), q(3, 2)]);
    }
    assert!(!has_stochastic_arbitrage(&m, OrderRelation::FirstOrder).unwrap());
    assert!(has_stochastic_arbitrage(&m, OrderRelation::SecondOrder).unwrap());
    assert_eq!(ssd_lower_bound(&m), q(8, 5));
    let report = check_prop1(&m).unwrap();
    assert!(report.holds());
    assert!(report.second_order_arbitrage && report.concave_arbitrage && report.kernel_nonmonotone);
}

#[test]
fn examples_against_grid_enumeration() {
    let values = grid(2, 12);
    assert_eq!(
        enumerate_min(&example1(), &values, OrderRelation::SecondOrder),
        Some(q(7, 6))
    );
    assert_eq!(
        enumerate_min(&example1(), &values, OrderRelation::Concave),
        Some(q(7, 6))
    );
    assert_eq!(
        enumerate_min(&example2(), &values, OrderRelation::SecondOrder),
        Some(q(8, 5))
    );
    assert_eq!(
        enumerate_min(&example2(), &values, OrderRelation::Concave),
        Some(q(8, 5))
    );
    assert_eq!(
        enumerate_min(&example1(), &values, OrderRelation::FirstOrder),
        Some(q(4, 3))
    );
    assert_eq!(
        enumerate_min(&example2(), &values, OrderRelation::FirstOrder),
        Some(q(9, 5))
    );
}

#[test]
fn explicit_ssd_program_is_certified() {
    let m = example1();
    let built = explicit_program(&m, OrderRelation::SecondOrder);
    let res = sdarb_lp::solve_lp(&built.program.lp).unwrap();
    assert_eq!(res.objective, Some(q(7, 6)));
    assert!(verify_optimality(&built.program.lp, &res));
}

#[test]
fn constant_kernel_has_no_arbitrage() {
    let mu = vec![q(1, 6), q(1, 2), q(1, 3)];
    let m = new_market(vec![q(1, 1), q(2, 1), q(4, 1)], mu.clone(), mu).unwrap();
    for rel in OrderRelation::ALL {
        for f in [Formulation::Explicit, Formulation::Compact] {
            let opt = min_price_with(&m, rel, &with(f)).unwrap();
            assert_eq!(opt.price, Some(m.market_price()), "{rel} {}", f.name());
        }
        assert!(!has_stochastic_arbitrage(&m, rel).unwrap());
    }
    assert_eq!(ssd_lower_bound(&m), m.market_price());
    assert!(check_prop1(&m).unwrap().holds());
    assert_eq!(check_prop2(&m), Err(ArbitrageError::PreconditionInadequate));
}

#[test]
fn single_atom_market() {
    let m = new_market(vec![q(5, 1)], vec![q(1, 1)], vec![q(1, 1)]).unwrap();
    for rel in OrderRelation::ALL {
        for f in [Formulation::Explicit, Formulation::Compact] {
            assert_eq!(price(&m, rel, f), q(5, 1));
        }
    }
}

#[test]
fn equal_mass_assignment_is_integral_at_root() {
    let third = q(1, 3);
    let m = new_market(
        vec![q(1, 1), q(2, 1), q(3, 1)],
        vec![third.clone(); 3],
        vec![q(1, 3), q(1, 2), q(1, 6)],
    )
    .unwrap();
    let eq = min_price(&m, OrderRelation::Equal).unwrap();
    assert_eq!(eq.nodes, 1);
    let perms = enumerate_min(&m, m.atoms(), OrderRelation::Equal).unwrap();
    assert_eq!(eq.price, Some(perms));
    let report = check_prop2(&m).unwrap();
    assert!(report.holds(), "{report:?}");
}

#[test]
fn first_order_node_limit_keeps_incumbent() {
    let m = new_market(
        vec![q(1, 1), q(2, 1), q(3, 1), q(4, 1), q(5, 1)],
        vec![q(3, 10), q(1, 10), q(2, 10), q(1, 10), q(3, 10)],
        vec![q(1, 10), q(3, 10), q(1, 10), q(4, 10), q(1, 10)],
    )
    .unwrap();
    let opts = MinPriceOptions {
        formulation: Formulation::Compact,
        milp: MilpOptions {
            max_nodes: 1,
            ..MilpOptions::default()
        },
        ..MinPriceOptions::default()
    };
    let opt = min_price_with(&m, OrderRelation::FirstOrder, &opts).unwrap();
    if opt.status == SolveStatus::NodeLimit {
        assert!(opt.theta.is_none());
        let inc = opt.incumbent.clone().unwrap();
        assert!(dominates_fsd(&m.pushforward(&inc).unwrap(), &m.objective_measure()));
        assert!(opt.optimal_price().is_err());
    }
}

fn arb_model(max_n: usize, equal: bool) -> impl Strategy<Value = MarketModel<Rational>> {
    (2usize..=max_n)
        .prop_flat_map(|n| {
            (
                prop::collection::btree_set(1i64..20, n),
                prop::collection::vec(1i64..10, n),
                prop::collection::vec(1i64..11, n),
            )
        })
        .prop_map(move |(atoms, w, k)| {
            let n = atoms.len();
            let w: Vec<i64> = if equal { vec![1; n] } else { w[..n].to_vec() };
            let total: i64 = w.iter().sum();
            let mu: Vec<Rational> = w.iter().map(|&x| q(x, total)).collect();
            let nu = mu.iter().zip(&k).map(|(m, &k)| m.clone() * q(k, 5)).collect();
            new_market(atoms.into_iter().map(|a| q(a, 2)).collect(), mu, nu).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn formulations_agree(m in arb_model(6, false)) {
        for rel in [OrderRelation::FirstOrder, OrderRelation::Concave, OrderRelation::SecondOrder] {
            if rel == OrderRelation::FirstOrder && m.len() > 5 {
                continue; // the big-M MILP grows quickly
            }
            prop_assert_eq!(price(&m, rel, Formulation::Explicit), price(&m, rel, Formulation::Compact), "{}", rel);
        }
    }

    #[test]
    fn optimizers_pass_the_checkers(m in arb_model(6, false)) {
        let mu = m.objective_measure();
        for f in [Formulation::Explicit, Formulation::Compact] {
            for rel in OrderRelation::ALL {
                if rel == OrderRelation::FirstOrder && f == Formulation::Explicit && m.len() > 4 {
                    continue;
                }
                let opt = min_price_with(&m, rel, &with(f)).unwrap();
                let theta = opt.theta.clone().unwrap();
                let d = m.pushforward(&theta).unwrap();
                prop_assert!(rel.holds(&d, &mu), "{} {}", rel, f.name());
                prop_assert_eq!(m.price(&theta).unwrap(), opt.price.clone().unwrap());
                if matches!(rel, OrderRelation::Concave | OrderRelation::SecondOrder) {
                    for method in SsdMethod::ALL {
                        prop_assert!(dominates_ssd(&d, &mu, method));
                    }
                }
            }
        }
    }

    #[test]
    fn first_order_and_equal_match_enumeration(m in arb_model(4, false)) {
        prop_assert_eq!(
            Some(price(&m, OrderRelation::FirstOrder, Formulation::Compact)),
            enumerate_min(&m, m.atoms(), OrderRelation::FirstOrder)
        );
        prop_assert_eq!(
            Some(price(&m, OrderRelation::Equal, Formulation::Explicit)),
            enumerate_min(&m, m.atoms(), OrderRelation::Equal)
        );
    }

    #[test]
    fn chain_of_bounds(m in arb_model(7, false)) {
        let chain = bound_chain(&m).unwrap();
        prop_assert!(chain.holds(), "{:?}", chain);
        let cv = price(&m, OrderRelation::Concave, Formulation::Auto);
        prop_assert!(cv >= chain.second_order && cv <= chain.equal);
    }

    #[test]
    fn doubled_cap_changes_nothing(m in arb_model(5, false)) {
        for rel in OrderRelation::ALL {
            for f in [Formulation::Explicit, Formulation::Compact] {
                if rel == OrderRelation::FirstOrder && f == Formulation::Explicit && m.len() > 4 {
                    continue;
                }
                let wide = MinPriceOptions { cap_multiple: 2, ..with(f) };
                let a = min_price_with(&m, rel, &with(f)).unwrap().price;
                let b = min_price_with(&m, rel, &wide).unwrap().price;
                prop_assert_eq!(a, b, "{} {}", rel, f.name());
            }
        }
    }

    #[test]
    fn equal_masses_satisfy_prop2(m in arb_model(6, true)) {
        let report = check_prop2(&m).unwrap();
        prop_assert!(report.holds(), "{:?}", report);
    }

    #[test]
    fn float_mode_tracks_rational(m in arb_model(6, false)) {
        let f = m.to_float();
        for rel in OrderRelation::ALL {
            let exact = min_price(&m, rel).unwrap().price.unwrap().to_f64();
            let approx = *min_price(&f, rel).unwrap().optimal_price().unwrap();
            prop_assert!((exact - approx).abs() <= 1e-7, "{} {} {}", rel, exact, approx);
        }
    }
}

#[test]
fn equal_relation_distribution_is_preserved() {
    let m = example1();
    let opt = min_price(&m, OrderRelation::Equal).unwrap();
    let d = m.pushforward(&opt.theta.unwrap()).unwrap();
    assert!(same_distribution(&d, &m.objective_measure()));
}
