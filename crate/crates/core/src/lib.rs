//! Stochastic arbitrage on a discrete payoff grid.
//!
//! A market is a grid of payoffs of the market portfolio carrying an objective
//! probability `μ` and a pricing measure `ν`; the pricing kernel is `π = ν/μ`.
//! The crate prices derivatives, decides stochastic orders between payoff
//! distributions, builds the optimal measure preserving derivative, and
//! computes the cheapest derivative whose payoff dominates the market under
//! each of four orders.
//!
//! Every numeric routine is generic over [`Scalar`]: exact rationals or `f64`.

pub mod arbitrage;
pub mod checks;
pub mod discretize;
pub mod io;
pub mod measures;
pub mod ompd;
pub mod orders;
pub mod rearrangement;
pub mod step;
pub mod synthetic;

pub use sdarb_lp::{tol, Mode, Rational, Scalar};
