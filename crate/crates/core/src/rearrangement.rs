//! Rearrangement integrals of quantile functions.
//!
//! All integrands are products of step functions, so every integral here is a
//! finite sum over the common refinement of the breakpoints; each piece is
//! evaluated at its midpoint, which avoids any continuity convention issues.

use sdarb_lp::{tol, Scalar};
use thiserror::Error;

use crate::measures::{MarketModel, MeasureError};
use crate::step::StepFunction;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RearrangementError {
    #[error("weight function must be nonincreasing and nonnegative")]
    GNotMonotone,
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Refinement pieces of `[0, 1]` as `(left, right, midpoint)`.
fn unit_pieces<T: Scalar>(functions: &[&StepFunction<T>]) -> Vec<(T, T, T)> {
    let points = StepFunction::refinement(functions, &T::zero(), &T::one());
    let two = T::from_i64(2);
    points
        .windows(2)
        .map(|w| {
            let mid = (w[0].clone() + &w[1]) / &two;
            (w[0].clone(), w[1].clone(), mid)
        })
        .collect()
}

/// `∫_0^1 q1(u) q2(1-u) du` when `reverse_second`, else `∫_0^1 q1(u) q2(u) du`.
pub fn quantile_product_integral<T: Scalar>(q1: &StepFunction<T>, q2: &StepFunction<T>, reverse_second: bool) -> T {
    let reflected;
    let g = if reverse_second {
        reflected = q2.reflect_unit();
        &reflected
    } else {
        q2
    };
    unit_pieces(&[q1, g])
        .into_iter()
        .map(|(a, b, mid)| q1.eval(&mid) * g.eval(&mid) * (b - a))
        .sum()
}

/// `∫_0^1 Q(u) Q_π(1-u) du`: the cheapest price of any payoff distributed like
/// the market under adequacy, and a lower bound on the price of any payoff
/// that second-order dominates it.
pub fn dybvig_bound<T: Scalar>(m: &MarketModel<T>) -> T {
    let q = m
        .objective_measure()
        .quantile()
        .expect("objective measure is a probability");
    let q_pi = m
        .kernel_distribution()
        .quantile()
        .expect("kernel distribution is a probability");
    quantile_product_integral(&q, &q_pi, true)
}

/// The two rearrangement integrals bracketing `∫ f g dμ`, plus that integral.
#[derive(Debug, Clone, PartialEq)]
pub struct HardyLittlewood<T> {
    pub lower: T,
    pub actual: T,
    pub upper: T,
}

impl<T: Scalar> HardyLittlewood<T> {
    pub fn holds(&self) -> bool {
        self.lower.le_tol(&self.actual, tol::COMPARE) && self.actual.le_tol(&self.upper, tol::COMPARE)
    }
}

pub fn hardy_littlewood_bounds<T: Scalar>(
    m: &MarketModel<T>,
    f: &[T],
    g: &[T],
) -> Result<HardyLittlewood<T>, MeasureError> {
    let mu = m.objective_measure();
    let qf = mu.map_values(f)?.quantile()?;
    let qg = mu.map_values(g)?.quantile()?;
    let actual = f.iter().zip(g).zip(m.mu()).map(|((a, b), w)| a.clone() * b * w).sum();
    Ok(HardyLittlewood {
        lower: quantile_product_integral(&qf, &qg, true),
        actual,
        upper: quantile_product_integral(&qf, &qg, false),
    })
}

fn check_lengths<T: Scalar>(m: &MarketModel<T>, f: &[T], g: &[T]) -> Result<(), MeasureError> {
    for v in [f, g] {
        if v.len() != m.len() {
            return Err(MeasureError::LengthMismatch {
                what: "payoff",
                expected: m.len(),
                got: v.len(),
            });
        }
    }
    Ok(())
}

fn pairwise<T: Scalar>(f: &[T], g: &[T], ok: impl Fn(T) -> bool) -> bool {
    (0..f.len()).all(|i| (i + 1..f.len()).all(|j| ok((f[i].clone() - &f[j]) * (g[i].clone() - &g[j]))))
}

/// `(f(ω) - f(ω'))(g(ω) - g(ω')) <= 0` for every pair of atoms.
pub fn is_countermonotone<T: Scalar>(m: &MarketModel<T>, f: &[T], g: &[T]) -> Result<bool, MeasureError> {
    check_lengths(m, f, g)?;
    Ok(pairwise(f, g, |p| p.le_tol(&T::zero(), tol::COMPARE)))
}

/// `(f(ω) - f(ω'))(g(ω) - g(ω')) >= 0` for every pair of atoms.
pub fn is_comonotone<T: Scalar>(m: &MarketModel<T>, f: &[T], g: &[T]) -> Result<bool, MeasureError> {
    check_lengths(m, f, g)?;
    Ok(pairwise(f, g, |p| T::zero().le_tol(&p, tol::COMPARE)))
}

/// Whether `∫_0^v q1 g >= ∫_0^v q2 g` for every `v`, given a nonincreasing
/// nonnegative weight `g`. Both sides are piecewise linear in `v`, so checking
/// the refinement breakpoints suffices.
pub fn hardy_majorization_holds<T: Scalar>(
    q1: &StepFunction<T>,
    q2: &StepFunction<T>,
    g: &StepFunction<T>,
) -> Result<bool, RearrangementError> {
    if !g.is_nonincreasing() || g.values().iter().any(|v| *v < T::zero()) {
        return Err(RearrangementError::GNotMonotone);
    }
    let mut lhs = T::zero();
    let mut rhs = T::zero();
    for (a, b, mid) in unit_pieces(&[q1, q2, g]) {
        let w = g.eval(&mid) * (b - a);
        lhs += &(q1.eval(&mid) * &w);
        rhs += &(q2.eval(&mid) * &w);
        if !rhs.le_tol(&lhs, tol::COMPARE) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::new_market;
    use crate::step::Continuity;
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
    fn dybvig_integral_of_examples() {
        assert_eq!(dybvig_bound(&example1()), q(7, 6));
        assert_eq!(dybvig_bound(&example2()), q(8, 5));
        let one = StepFunction::constant(q(1, 1));
        assert_eq!(quantile_product_integral(&one, &one, true), q(1, 1));
    }

    #[test]
    fn hardy_littlewood_example() {
        let m = example1();
        let hl = hardy_littlewood_bounds(&m, m.atoms(), m.kernel()).unwrap();
        assert_eq!(hl.lower, q(7, 6));
        assert_eq!(hl.actual, q(5, 3));
        assert!(hl.upper >= q(5, 3));

        let c = vec![q(3, 1); 2];
        let hl = hardy_littlewood_bounds(&m, &c, m.kernel()).unwrap();
        let expect = q(3, 1) * (m.kernel()[0].clone() * &m.mu()[0] + m.kernel()[1].clone() * &m.mu()[1]);
        assert_eq!((hl.lower.clone(), hl.actual.clone()), (expect.clone(), expect.clone()));
        assert_eq!(hl.upper, expect);
    }

    #[test]
    fn monotonicity_of_pairs() {
        let m = example1();
        let theta = [q(2, 1), q(1, 1)];
        assert!(is_countermonotone(&m, &theta, m.kernel()).unwrap());
        assert!(is_comonotone(&m, m.kernel(), m.kernel()).unwrap());
        let up = [q(1, 1), q(2, 1)];
        assert!(!is_countermonotone(&m, &up, &up).unwrap());
        assert!(is_countermonotone(&m, &up, &[q(1, 1)]).is_err());
    }

    #[test]
    fn majorization_cases() {
        let m = example1();
        let q1 = m.objective_measure().quantile().unwrap();
        let one = StepFunction::constant(q(1, 1));
        assert_eq!(hardy_majorization_holds(&q1, &q1, &one), Ok(true));
        let up = StepFunction::new(vec![q(1, 2)], vec![q(0, 1), q(1, 1)], Continuity::Right).unwrap();
        assert_eq!(
            hardy_majorization_holds(&q1, &q1, &up),
            Err(RearrangementError::GNotMonotone)
        );
        let neg = StepFunction::constant(q(-1, 1));
        assert_eq!(
            hardy_majorization_holds(&q1, &q1, &neg),
            Err(RearrangementError::GNotMonotone)
        );
    }

    fn arb_model() -> impl Strategy<Value = MarketModel<Rational>> {
        (2usize..7)
            .prop_flat_map(|n| {
                (
                    prop::collection::btree_set(0i64..30, n),
                    prop::collection::vec(1i64..10, n),
                    prop::collection::vec(1i64..10, n),
                )
            })
            .prop_map(|(atoms, w, k)| {
                let n = atoms.len();
                let total: i64 = w[..n].iter().sum();
                let mu: Vec<Rational> = w[..n].iter().map(|&x| q(x, total)).collect();
                let nu = mu.iter().zip(&k).map(|(m, &k)| m.clone() * q(k, 5)).collect();
                new_market(atoms.into_iter().map(|a| q(a, 2)).collect(), mu, nu).unwrap()
            })
    }

    proptest! {
        #[test]
        fn bounds_bracket_and_equality_cases(m in arb_model(), raw in prop::collection::vec(0i64..6, 7)) {
            let f: Vec<Rational> = raw[..m.len()].iter().map(|&v| q(v, 1)).collect();
            let g = m.kernel().to_vec();
            let hl = hardy_littlewood_bounds(&m, &f, &g).unwrap();
            prop_assert!(hl.holds());
            if is_countermonotone(&m, &f, &g).unwrap() {
                prop_assert_eq!(&hl.actual, &hl.lower);
            }
            if is_comonotone(&m, &f, &g).unwrap() {
                prop_assert_eq!(&hl.actual, &hl.upper);
            }
        }

        #[test]
        fn dybvig_below_market_price(m in arb_model()) {
            prop_assert!(dybvig_bound(&m) <= m.market_price());
        }

        #[test]
        fn dybvig_ignores_labels(m in arb_model(), rot in 0usize..7) {
            // Permute kernel values among atoms of equal objective mass: the
            // laws of X and of π(X) are unchanged, so the integral must be too.
            let n = m.len();
            let mut kernel = m.kernel().to_vec();
            for i in 0..n {
                let group: Vec<usize> = (0..n).filter(|&j| m.mu()[j] == m.mu()[i]).collect();
                if group[0] == i && group.len() > 1 {
                    let vals: Vec<Rational> = group.iter().map(|&j| m.kernel()[j].clone()).collect();
                    for (k, &j) in group.iter().enumerate() {
                        kernel[j] = vals[(k + rot) % group.len()].clone();
                    }
                }
            }
            let nu = kernel.iter().zip(m.mu()).map(|(k, w)| k.clone() * w).collect();
            let relabelled = new_market(m.atoms().to_vec(), m.mu().to_vec(), nu).unwrap();
            prop_assert_eq!(dybvig_bound(&relabelled), dybvig_bound(&m));
        }
    }
}
