//! Cheapest derivatives whose payoff dominates the market portfolio, and the
//! equivalences between stochastic arbitrage and kernel monotonicity.
//!
//! `min_price` minimizes `Σ ν_i θ_i` over payoffs `0 <= θ_i <= x_n` such that
//! `θ(X)` stands in the requested order relation to `X`. Two backends exist:
//!
//! * explicit: the textbook LP/MILP (shortfall variables for second order,
//!   big-M binaries for first order, an assignment MILP for equality), solved
//!   by the `sdarb-lp` simplex and branch and bound;
//! * compact: a closed form for second order and concave (see `slots`), and
//!   a nested-knapsack branch and bound for first order. These scale to the
//!   grid sizes of the discretization study.
//!
//! [`Formulation::Auto`] picks explicit for small grids. Equality always uses
//! the assignment MILP.

mod explicit;
mod levels;
mod slots;

use sdarb_lp::{tol, MilpOptions, OptResult, ProgramError, Scalar, SolveStatus};
use thiserror::Error;

use crate::measures::{MarketModel, MeasureError, PayoffProfile};
use crate::ompd::verify_ompd_contract;
use crate::orders::OrderRelation;
use crate::rearrangement::dybvig_bound;

pub use explicit::Built as ExplicitProgram;

/// Largest grid solved with the explicit LP under [`Formulation::Auto`].
pub const EXPLICIT_LP_MAX_ATOMS: usize = 6;
/// Largest grid solved with the explicit first-order MILP under [`Formulation::Auto`].
pub const EXPLICIT_MILP_MAX_ATOMS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArbitrageError {
    #[error("solver stopped with status {0}")]
    Solver(&'static str),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("model is not adequate: objective masses are not all equal")]
    PreconditionInadequate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    Auto,
    Explicit,
    Compact,
}

impl Formulation {
    pub fn name(self) -> &'static str {
        match self {
            Self::Auto => "auto",
            Self::Explicit => "explicit",
            Self::Compact => "compact",
        }
    }

    fn resolve(self, rel: OrderRelation, n: usize) -> Self {
        match (self, rel) {
            (_, OrderRelation::Equal) => Self::Explicit,
            (Self::Auto, OrderRelation::FirstOrder) if n <= EXPLICIT_MILP_MAX_ATOMS => Self::Explicit,
            (Self::Auto, OrderRelation::Concave | OrderRelation::SecondOrder) if n <= EXPLICIT_LP_MAX_ATOMS => {
                Self::Explicit
            }
            (Self::Auto, _) => Self::Compact,
            (f, _) => f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinPriceOptions {
    pub formulation: Formulation,
    pub milp: MilpOptions,
    /// Payoffs are capped at `cap_multiple * x_n`.
    pub cap_multiple: i64,
}

impl Default for MinPriceOptions {
    fn default() -> Self {
        Self {
            formulation: Formulation::Auto,
            milp: MilpOptions::default(),
            cap_multiple: 1,
        }
    }
}

/// Outcome of one constrained minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceOptimum<T> {
    pub relation: OrderRelation,
    pub status: SolveStatus,
    pub formulation: Formulation,
    /// Minimizing payoff when `status` is optimal.
    pub theta: Option<PayoffProfile<T>>,
    pub price: Option<T>,
    /// Best feasible payoff found when a limit stopped the search.
    pub incumbent: Option<PayoffProfile<T>>,
    /// Root relaxation value (MILP and level search only).
    pub root_bound: Option<T>,
    pub iterations: usize,
    pub nodes: usize,
}

impl<T: Scalar> PriceOptimum<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// The optimal price, or an error naming the solver status.
    pub fn optimal_price(&self) -> Result<&T, ArbitrageError> {
        match (&self.status, &self.price) {
            (SolveStatus::Optimal, Some(p)) => Ok(p),
            (status, _) => Err(ArbitrageError::Solver(status.name())),
        }
    }

    fn from_lp(
        relation: OrderRelation,
        formulation: Formulation,
        res: OptResult<T>,
        payoff: impl Fn(&[T]) -> Vec<T>,
    ) -> Self {
        let profile = |x: &[T]| {
            PayoffProfile::new(payoff(x).into_iter().map(|v| T::max_of(v, T::zero())).collect())
                .expect("solver payoffs are finite")
        };
        Self {
            relation,
            status: res.status,
            formulation,
            theta: res.solution.as_deref().map(profile),
            price: res.objective,
            incumbent: res.incumbent.as_deref().map(profile),
            root_bound: res.root_bound,
            iterations: res.iterations,
            nodes: res.nodes,
        }
    }
}

/// The explicit program for `rel`, e.g. for dumping in text form.
pub fn explicit_program<T: Scalar>(m: &MarketModel<T>, rel: OrderRelation) -> ExplicitProgram<T> {
    explicit::build(m, rel, &m.atoms()[m.len() - 1])
}

pub fn min_price<T: Scalar>(m: &MarketModel<T>, rel: OrderRelation) -> Result<PriceOptimum<T>, ArbitrageError> {
    min_price_with(m, rel, &MinPriceOptions::default())
}

pub fn min_price_with<T: Scalar>(
    m: &MarketModel<T>,
    rel: OrderRelation,
    options: &MinPriceOptions,
) -> Result<PriceOptimum<T>, ArbitrageError> {
    let cap = T::from_i64(options.cap_multiple) * &m.atoms()[m.len() - 1];
    let formulation = options.formulation.resolve(rel, m.len());
    if formulation == Formulation::Explicit {
        let built = explicit::build(m, rel, &cap);
        let res = explicit::solve(&built, options)?;
        return Ok(PriceOptimum::from_lp(rel, formulation, res, |x| built.payoff(x)));
    }
    match rel {
        OrderRelation::Concave | OrderRelation::SecondOrder => {
            let (theta, price) = slots::solve(m)?;
            Ok(PriceOptimum {
                relation: rel,
                status: SolveStatus::Optimal,
                formulation,
                theta: Some(theta),
                price: Some(price),
                incumbent: None,
                root_bound: None,
                iterations: 0,
                nodes: 0,
            })
        }
        OrderRelation::FirstOrder => {
            let out = levels::solve(m, options.milp.max_nodes);
            let profile = out
                .levels
                .map(|k| PayoffProfile::new(k.iter().map(|&k| m.atoms()[k].clone()).collect()).expect("grid payoffs"));
            let optimal = out.status == SolveStatus::Optimal;
            Ok(PriceOptimum {
                relation: rel,
                status: out.status,
                formulation,
                theta: if optimal { profile.clone() } else { None },
                price: if optimal { out.price } else { None },
                incumbent: if optimal { None } else { profile },
                root_bound: Some(out.root_bound),
                iterations: 0,
                nodes: out.nodes,
            })
        }
        OrderRelation::Equal => unreachable!("equality always resolves to the explicit program"),
    }
}

/// Whether some payoff standing in relation `rel` to the market is strictly
/// cheaper than the market portfolio (by more than `ARBITRAGE` in float mode).
pub fn has_stochastic_arbitrage<T: Scalar>(m: &MarketModel<T>, rel: OrderRelation) -> Result<bool, ArbitrageError> {
    let opt = min_price(m, rel)?;
    Ok(opt.optimal_price()?.lt_tol(&m.market_price(), tol::ARBITRAGE))
}

/// Lower bound on the price of any payoff that second-order dominates the
/// market: `∫_0^1 Q(u) Q_π(1-u) du`.
pub fn ssd_lower_bound<T: Scalar>(m: &MarketModel<T>) -> T {
    dybvig_bound(m)
}

/// Minimal prices under all four relations.
#[derive(Debug, Clone, PartialEq)]
pub struct AllMinima<T> {
    pub equal: PriceOptimum<T>,
    pub first_order: PriceOptimum<T>,
    pub concave: PriceOptimum<T>,
    pub second_order: PriceOptimum<T>,
}

impl<T: Scalar> AllMinima<T> {
    pub fn get(&self, rel: OrderRelation) -> &PriceOptimum<T> {
        match rel {
            OrderRelation::Equal => &self.equal,
            OrderRelation::FirstOrder => &self.first_order,
            OrderRelation::Concave => &self.concave,
            OrderRelation::SecondOrder => &self.second_order,
        }
    }
}

pub fn all_minima<T: Scalar>(m: &MarketModel<T>, options: &MinPriceOptions) -> Result<AllMinima<T>, ArbitrageError> {
    Ok(AllMinima {
        equal: min_price_with(m, OrderRelation::Equal, options)?,
        first_order: min_price_with(m, OrderRelation::FirstOrder, options)?,
        concave: min_price_with(m, OrderRelation::Concave, options)?,
        second_order: min_price_with(m, OrderRelation::SecondOrder, options)?,
    })
}

/// `market >= Equal >= FirstOrder >= SecondOrder >= Dybvig bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundChain<T> {
    pub market: T,
    pub equal: T,
    pub first_order: T,
    pub second_order: T,
    pub dybvig: T,
}

impl<T: Scalar> BoundChain<T> {
    pub fn values(&self) -> [&T; 5] {
        [
            &self.market,
            &self.equal,
            &self.first_order,
            &self.second_order,
            &self.dybvig,
        ]
    }

    pub fn holds(&self) -> bool {
        self.values().windows(2).all(|w| w[1].le_tol(w[0], tol::COMPARE))
    }
}

pub fn bound_chain<T: Scalar>(m: &MarketModel<T>) -> Result<BoundChain<T>, ArbitrageError> {
    let price = |rel| -> Result<T, ArbitrageError> { Ok(min_price(m, rel)?.optimal_price()?.clone()) };
    Ok(BoundChain {
        market: m.market_price(),
        equal: price(OrderRelation::Equal)?,
        first_order: price(OrderRelation::FirstOrder)?,
        second_order: price(OrderRelation::SecondOrder)?,
        dybvig: ssd_lower_bound(m),
    })
}

/// Second-order arbitrage, concave arbitrage and a nonmonotone kernel occur
/// together or not at all.
#[derive(Debug, Clone, PartialEq)]
pub struct Prop1Report<T> {
    pub market_price: T,
    pub second_order_price: T,
    pub concave_price: T,
    pub second_order_arbitrage: bool,
    pub concave_arbitrage: bool,
    pub kernel_nonmonotone: bool,
}

impl<T: Scalar> Prop1Report<T> {
    pub fn holds(&self) -> bool {
        self.second_order_arbitrage == self.concave_arbitrage && self.concave_arbitrage == self.kernel_nonmonotone
    }

    fn from_prices(m: &MarketModel<T>, second_order: &T, concave: &T) -> Self {
        let market = m.market_price();
        Self {
            second_order_arbitrage: second_order.lt_tol(&market, tol::ARBITRAGE),
            concave_arbitrage: concave.lt_tol(&market, tol::ARBITRAGE),
            kernel_nonmonotone: !m.is_kernel_monotone(),
            second_order_price: second_order.clone(),
            concave_price: concave.clone(),
            market_price: market,
        }
    }
}

pub fn check_prop1<T: Scalar>(m: &MarketModel<T>) -> Result<Prop1Report<T>, ArbitrageError> {
    let ssd = min_price(m, OrderRelation::SecondOrder)?;
    let cv = min_price(m, OrderRelation::Concave)?;
    Ok(Prop1Report::from_prices(m, ssd.optimal_price()?, cv.optimal_price()?))
}

/// Under equal masses: all four minima coincide with the price of the optimal
/// measure preserving derivative and with the Dybvig bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Prop2Report<T> {
    pub prop1: Prop1Report<T>,
    pub equal_price: T,
    pub first_order_price: T,
    pub ompd_price: T,
    pub dybvig_bound: T,
    /// Branch-and-bound nodes of the assignment MILP; 1 means the root
    /// relaxation was already integral.
    pub equal_nodes: usize,
    pub ompd_distribution_preserved: bool,
    pub ompd_countermonotone: bool,
}

impl<T: Scalar> Prop2Report<T> {
    pub fn prices(&self) -> [&T; 6] {
        [
            &self.equal_price,
            &self.first_order_price,
            &self.prop1.concave_price,
            &self.prop1.second_order_price,
            &self.ompd_price,
            &self.dybvig_bound,
        ]
    }

    pub fn minima_agree(&self) -> bool {
        self.prices().iter().all(|p| p.eq_tol(&self.equal_price, tol::COMPARE))
    }

    pub fn holds(&self) -> bool {
        self.prop1.holds()
            && self.minima_agree()
            && self.equal_nodes == 1
            && self.ompd_distribution_preserved
            && self.ompd_countermonotone
    }
}

pub fn check_prop2<T: Scalar>(m: &MarketModel<T>) -> Result<Prop2Report<T>, ArbitrageError> {
    if !m.is_adequate() {
        return Err(ArbitrageError::PreconditionInadequate);
    }
    let minima = all_minima(m, &MinPriceOptions::default())?;
    let contract = verify_ompd_contract(m);
    Ok(Prop2Report {
        prop1: Prop1Report::from_prices(m, minima.second_order.optimal_price()?, minima.concave.optimal_price()?),
        equal_price: minima.equal.optimal_price()?.clone(),
        first_order_price: minima.first_order.optimal_price()?.clone(),
        ompd_price: contract.price,
        dybvig_bound: contract.dybvig_bound,
        equal_nodes: minima.equal.nodes,
        ompd_distribution_preserved: contract.distribution_preserved,
        ompd_countermonotone: contract.countermonotone,
    })
}

#[cfg(test)]
mod tests;
