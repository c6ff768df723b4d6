//! Decision procedures for distributional equality, first- and second-order
//! stochastic dominance and the concave order between discrete distributions.
//!
//! In float mode atoms of the first argument that lie within the comparison
//! tolerance of an atom of the second are snapped onto it before testing, so
//! that payoffs recovered from a float LP (say `1.4999999999999998`) are not
//! treated as separate support points.

use std::fmt;
use std::str::FromStr;

use sdarb_lp::{tol, Scalar};
use thiserror::Error;

use crate::measures::DiscreteMeasure;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrderError {
    #[error("unknown method '{0}' (expected cdf_integral, quantile_integral or shortfall)")]
    UnknownMethod(String),
    #[error("unknown order '{0}' (expected eq, fsd, cv or ssd)")]
    UnknownOrder(String),
}

/// The four order constraints, from strongest to weakest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OrderRelation {
    Equal,
    FirstOrder,
    Concave,
    SecondOrder,
}

impl OrderRelation {
    pub const ALL: [OrderRelation; 4] = [Self::Equal, Self::FirstOrder, Self::Concave, Self::SecondOrder];

    /// Short name used on the command line and in reports.
    pub fn short_name(self) -> &'static str {
        match self {
            Self::Equal => "eq",
            Self::FirstOrder => "fsd",
            Self::Concave => "cv",
            Self::SecondOrder => "ssd",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Equal => "Equal",
            Self::FirstOrder => "FirstOrder",
            Self::Concave => "Concave",
            Self::SecondOrder => "SecondOrder",
        }
    }

    /// Whether `d1` stands in this relation to `d2`.
    pub fn holds<T: Scalar>(self, d1: &DiscreteMeasure<T>, d2: &DiscreteMeasure<T>) -> bool {
        match self {
            Self::Equal => same_distribution(d1, d2),
            Self::FirstOrder => dominates_fsd(d1, d2),
            Self::Concave => dominates_cv(d1, d2),
            Self::SecondOrder => dominates_ssd(d1, d2, SsdMethod::Shortfall),
        }
    }
}

impl fmt::Display for OrderRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OrderRelation {
    type Err = OrderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "eq" | "equal" => Ok(Self::Equal),
            "fsd" | "first" | "firstorder" => Ok(Self::FirstOrder),
            "cv" | "concave" => Ok(Self::Concave),
            "ssd" | "second" | "secondorder" => Ok(Self::SecondOrder),
            _ => Err(OrderError::UnknownOrder(s.to_string())),
        }
    }
}

/// How second-order dominance is decided; all three agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsdMethod {
    /// `∫_0^y F_1 <= ∫_0^y F_2` at every support point and 0.
    CdfIntegral,
    /// `∫_0^v Q_1 >= ∫_0^v Q_2` at every cumulative level.
    QuantileIntegral,
    /// `E[(t - Y_1)_+] <= E[(t - Y_2)_+]` at every support point.
    Shortfall,
}

impl SsdMethod {
    pub const ALL: [SsdMethod; 3] = [Self::CdfIntegral, Self::QuantileIntegral, Self::Shortfall];

    pub fn name(self) -> &'static str {
        match self {
            Self::CdfIntegral => "cdf_integral",
            Self::QuantileIntegral => "quantile_integral",
            Self::Shortfall => "shortfall",
        }
    }
}

impl FromStr for SsdMethod {
    type Err = OrderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cdf_integral" => Ok(Self::CdfIntegral),
            "quantile_integral" => Ok(Self::QuantileIntegral),
            "shortfall" => Ok(Self::Shortfall),
            _ => Err(OrderError::UnknownMethod(s.to_string())),
        }
    }
}

/// Float mode only: move atoms of `d1` onto nearby atoms of `d2`.
fn snapped<T: Scalar>(d1: &DiscreteMeasure<T>, d2: &DiscreteMeasure<T>) -> DiscreteMeasure<T> {
    if T::is_exact() {
        return d1.clone();
    }
    let values: Vec<T> = d1
        .atoms()
        .iter()
        .map(|a| {
            d2.atoms()
                .iter()
                .find(|b| a.eq_tol(b, tol::COMPARE))
                .unwrap_or(a)
                .clone()
        })
        .collect();
    d1.map_values(&values).expect("snapped atoms stay nonnegative")
}

fn support_union<T: Scalar>(d1: &DiscreteMeasure<T>, d2: &DiscreteMeasure<T>, with_zero: bool) -> Vec<T> {
    let mut points: Vec<T> = d1.atoms().iter().chain(d2.atoms()).cloned().collect();
    if with_zero {
        points.push(T::zero());
    }
    points.sort_by(Scalar::total_cmp);
    points.dedup();
    points
}

pub fn same_distribution<T: Scalar>(d1: &DiscreteMeasure<T>, d2: &DiscreteMeasure<T>) -> bool {
    let d1 = snapped(d1, d2);
    d1.len() == d2.len()
        && d1
            .atoms()
            .iter()
            .zip(d2.atoms())
            .chain(d1.masses().iter().zip(d2.masses()))
            .all(|(a, b)| a.eq_tol(b, tol::COMPARE))
}

pub fn dominates_fsd<T: Scalar>(d1: &DiscreteMeasure<T>, d2: &DiscreteMeasure<T>) -> bool {
    let d1 = snapped(d1, d2);
    let (f1, f2) = (d1.cdf(), d2.cdf());
    support_union(&d1, d2, false)
        .iter()
        .all(|x| f1.eval(x).le_tol(&f2.eval(x), tol::COMPARE))
}

pub fn dominates_ssd<T: Scalar>(d1: &DiscreteMeasure<T>, d2: &DiscreteMeasure<T>, method: SsdMethod) -> bool {
    let d1 = snapped(d1, d2);
    match method {
        SsdMethod::CdfIntegral => {
            let (f1, f2) = (d1.cdf(), d2.cdf());
            let zero = T::zero();
            support_union(&d1, d2, true)
                .iter()
                .all(|y| f1.integral(&zero, y).le_tol(&f2.integral(&zero, y), tol::COMPARE))
        }
        SsdMethod::QuantileIntegral => {
            let (Ok(q1), Ok(q2)) = (d1.quantile(), d2.quantile()) else {
                return false;
            };
            let mut levels: Vec<T> = d1.cumulative().into_iter().chain(d2.cumulative()).collect();
            levels.push(T::one());
            levels.sort_by(Scalar::total_cmp);
            levels.dedup();
            let zero = T::zero();
            levels
                .iter()
                .all(|v| q2.integral(&zero, v).le_tol(&q1.integral(&zero, v), tol::COMPARE))
        }
        SsdMethod::Shortfall => support_union(&d1, d2, false)
            .iter()
            .all(|t| d1.shortfall(t).le_tol(&d2.shortfall(t), tol::COMPARE)),
    }
}

pub fn dominates_cv<T: Scalar>(d1: &DiscreteMeasure<T>, d2: &DiscreteMeasure<T>) -> bool {
    d1.mean().eq_tol(&d2.mean(), tol::COMPARE) && dominates_ssd(d1, d2, SsdMethod::Shortfall)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{new_market, PayoffProfile};
    use proptest::prelude::*;
    use sdarb_lp::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn measure(atoms: &[i64], weights: &[i64]) -> DiscreteMeasure<Rational> {
        let total: i64 = weights.iter().sum();
        DiscreteMeasure::new(
            atoms.iter().map(|&a| q(a, 1)).collect(),
            weights.iter().map(|&w| q(w, total)).collect(),
        )
        .unwrap()
    }

    fn example1_mu() -> DiscreteMeasure<Rational> {
        measure(&[1, 2], &[2, 1])
    }

    fn example2_mu() -> DiscreteMeasure<Rational> {
        measure(&[1, 2], &[1, 2])
    }

    #[test]
    fn distributional_equality() {
        let mu = example1_mu();
        let swapped = mu.map_values(&[q(2, 1), q(1, 1)]).unwrap();
        assert!(!same_distribution(&mu, &swapped));
        assert!(same_distribution(&mu, &mu));
        let half = measure(&[1, 2], &[1, 1]);
        assert!(same_distribution(&half.map_values(&[q(2, 1), q(1, 1)]).unwrap(), &half));
    }

    #[test]
    fn first_order_examples() {
        let mu = example2_mu();
        let two = DiscreteMeasure::point_mass(q(2, 1));
        assert!(dominates_fsd(&two, &mu));
        assert!(dominates_fsd(&mu, &mu));
        assert!(!dominates_fsd(&mu, &two));
    }

    #[test]
    fn second_order_examples() {
        let mu = example1_mu();
        let theta = mu.map_values(&[q(3, 2), q(1, 1)]).unwrap();
        let one = DiscreteMeasure::point_mass(q(1, 1));
        let two = DiscreteMeasure::point_mass(q(2, 1));
        for method in SsdMethod::ALL {
            assert!(dominates_ssd(&theta, &mu, method), "{}", method.name());
            assert!(dominates_ssd(&mu, &mu, method));
            assert!(!dominates_ssd(&one, &two, method));
        }
    }

    #[test]
    fn concave_examples() {
        let mu = example1_mu();
        let theta = mu.map_values(&[q(3, 2), q(1, 1)]).unwrap();
        assert_eq!(theta.mean(), q(4, 3));
        assert!(dominates_cv(&theta, &mu));
        assert!(dominates_cv(&mu, &mu));
        let mu2 = example2_mu();
        assert!(!dominates_cv(&DiscreteMeasure::point_mass(q(2, 1)), &mu2));
    }

    #[test]
    fn parsing() {
        assert_eq!("shortfall".parse::<SsdMethod>(), Ok(SsdMethod::Shortfall));
        assert_eq!(
            "lorenz".parse::<SsdMethod>(),
            Err(OrderError::UnknownMethod("lorenz".into()))
        );
        assert_eq!("fsd".parse::<OrderRelation>(), Ok(OrderRelation::FirstOrder));
        assert_eq!("CV".parse::<OrderRelation>(), Ok(OrderRelation::Concave));
        assert!("tsd".parse::<OrderRelation>().is_err());
        for r in OrderRelation::ALL {
            assert_eq!(r.short_name().parse::<OrderRelation>(), Ok(r));
        }
    }

    #[test]
    fn float_snapping_absorbs_roundoff() {
        let m = new_market(vec![1.0, 2.0], vec![2.0 / 3.0, 1.0 / 3.0], vec![1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let theta = PayoffProfile::new(vec![1.5 - 2e-16, 1.0 + 1e-15]).unwrap();
        let d = m.pushforward(&theta).unwrap();
        let mu = m.objective_measure();
        for method in SsdMethod::ALL {
            assert!(dominates_ssd(&d, &mu, method));
        }
        assert!(dominates_cv(&d, &mu));
        let fsd = m
            .pushforward(&PayoffProfile::new(vec![2.0 - 1e-14, 1.0]).unwrap())
            .unwrap();
        assert!(dominates_fsd(&fsd, &mu));
    }

    fn arb_pair() -> impl Strategy<Value = (DiscreteMeasure<Rational>, DiscreteMeasure<Rational>)> {
        let one = prop::collection::btree_map(0i64..12, 1i64..10, 1..8);
        (one.clone(), one).prop_map(|(a, b)| {
            let build = |m: std::collections::BTreeMap<i64, i64>| {
                let atoms: Vec<i64> = m.keys().copied().collect();
                let weights: Vec<i64> = m.values().copied().collect();
                measure(&atoms, &weights)
            };
            (build(a), build(b))
        })
    }

    proptest! {
        #[test]
        fn ssd_methods_agree((d1, d2) in arb_pair()) {
            let verdicts: Vec<bool> = SsdMethod::ALL.iter().map(|&m| dominates_ssd(&d1, &d2, m)).collect();
            prop_assert!(verdicts.iter().all(|&v| v == verdicts[0]), "{:?}", verdicts);
        }

        #[test]
        fn implication_chain((d1, d2) in arb_pair()) {
            if same_distribution(&d1, &d2) {
                prop_assert!(dominates_fsd(&d1, &d2));
            }
            if dominates_fsd(&d1, &d2) {
                prop_assert!(dominates_ssd(&d1, &d2, SsdMethod::Shortfall));
            }
            if dominates_cv(&d1, &d2) {
                prop_assert!(dominates_ssd(&d1, &d2, SsdMethod::CdfIntegral));
            }
            if dominates_fsd(&d1, &d2) && dominates_fsd(&d2, &d1) {
                prop_assert!(same_distribution(&d1, &d2));
            }
        }

        #[test]
        fn relabelled_atoms_keep_distribution(d in arb_pair().prop_map(|p| p.0)) {
            let values: Vec<Rational> = d.atoms().iter().rev().cloned().collect();
            let reversed = DiscreteMeasure::new(
                d.atoms().to_vec(),
                d.masses().iter().rev().cloned().collect(),
            ).unwrap();
            prop_assert!(same_distribution(&reversed.map_values(&values).unwrap(), &d));
        }
    }
}
