//! Discrete measures, market models and payoff profiles.

use std::cmp::Ordering;

use sdarb_lp::{tol, Scalar};
use thiserror::Error;

use crate::step::{Continuity, StepFunction};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeasureError {
    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("a measure needs at least one atom")]
    Empty,
    #[error("atoms must be strictly increasing (index {0})")]
    NonIncreasingAtoms(usize),
    #[error("atom {0} is negative")]
    NegativeAtom(usize),
    #[error("{which} mass at index {index} is not strictly positive")]
    ZeroMass { which: &'static str, index: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("objective masses sum to {0}, not 1")]
    MuNotProbability(String),
    #[error("total mass is {0}, not 1")]
    NotProbability(String),
    #[error("payoff at index {0} is negative")]
    NegativePayoff(usize),
}

fn check_finite<T: Scalar>(values: &[T], what: &'static str) -> Result<(), MeasureError> {
    if values.iter().all(Scalar::is_finite) {
        Ok(())
    } else {
        Err(MeasureError::NonFinite(what))
    }
}

fn check_atoms<T: Scalar>(atoms: &[T]) -> Result<(), MeasureError> {
    if atoms.is_empty() {
        return Err(MeasureError::Empty);
    }
    check_finite(atoms, "atoms")?;
    if let Some(i) = atoms.iter().position(|a| *a < T::zero()) {
        return Err(MeasureError::NegativeAtom(i));
    }
    if let Some(k) = atoms.windows(2).position(|w| w[0] >= w[1]) {
        return Err(MeasureError::NonIncreasingAtoms(k + 1));
    }
    Ok(())
}

fn check_masses<T: Scalar>(masses: &[T], which: &'static str) -> Result<(), MeasureError> {
    check_finite(masses, which)?;
    match masses.iter().position(|m| *m <= T::zero()) {
        Some(index) => Err(MeasureError::ZeroMass { which, index }),
        None => Ok(()),
    }
}

/// Finitely supported measure on strictly increasing nonnegative atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure<T> {
    atoms: Vec<T>,
    masses: Vec<T>,
}

impl<T: Scalar> DiscreteMeasure<T> {
    pub fn new(atoms: Vec<T>, masses: Vec<T>) -> Result<Self, MeasureError> {
        if masses.len() != atoms.len() {
            return Err(MeasureError::LengthMismatch {
                what: "masses",
                expected: atoms.len(),
                got: masses.len(),
            });
        }
        check_atoms(&atoms)?;
        check_masses(&masses, "measure")?;
        Ok(Self { atoms, masses })
    }

    pub fn point_mass(x: T) -> Self {
        Self {
            atoms: vec![x],
            masses: vec![T::one()],
        }
    }

    pub fn atoms(&self) -> &[T] {
        &self.atoms
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> T {
        self.masses.iter().cloned().sum()
    }

    pub fn is_probability(&self) -> bool {
        self.total_mass().eq_tol(&T::one(), tol::COMPARE)
    }

    fn require_probability(&self) -> Result<(), MeasureError> {
        if self.is_probability() {
            Ok(())
        } else {
            Err(MeasureError::NotProbability(self.total_mass().to_exact_string()))
        }
    }

    /// `Σ m_k x_k`.
    pub fn mean(&self) -> T {
        self.atoms.iter().zip(&self.masses).map(|(x, m)| x.clone() * m).sum()
    }

    /// Cumulative masses `F(x_1), …, F(x_n)`.
    pub fn cumulative(&self) -> Vec<T> {
        let mut acc = T::zero();
        self.masses
            .iter()
            .map(|m| {
                acc += m;
                acc.clone()
            })
            .collect()
    }

    /// Right-continuous distribution function.
    pub fn cdf(&self) -> StepFunction<T> {
        let mut values = vec![T::zero()];
        values.extend(self.cumulative());
        StepFunction::new(self.atoms.clone(), values, Continuity::Right).expect("atoms are strictly increasing")
    }

    pub fn cdf_at(&self, x: &T) -> T {
        self.atoms
            .iter()
            .zip(&self.masses)
            .take_while(|(a, _)| *a <= x)
            .map(|(_, m)| m.clone())
            .sum()
    }

    /// Left-continuous quantile `Q(u) = inf{x : F(x) >= u}` on `[0, 1]`, with
    /// `Q(0)` the smallest atom. Breakpoints are the cumulative levels below 1.
    pub fn quantile(&self) -> Result<StepFunction<T>, MeasureError> {
        self.require_probability()?;
        let mut levels = self.cumulative();
        levels.pop();
        Ok(StepFunction::new(levels, self.atoms.clone(), Continuity::Left).expect("masses are positive"))
    }

    /// `E[(t - X)_+]`.
    pub fn shortfall(&self, t: &T) -> T {
        self.atoms
            .iter()
            .zip(&self.masses)
            .filter(|(x, _)| *x < t)
            .map(|(x, m)| (t.clone() - x) * m)
            .sum()
    }

    /// Distribution of `g(X)` for a payoff given per atom.
    pub fn map_values(&self, values: &[T]) -> Result<Self, MeasureError> {
        if values.len() != self.len() {
            return Err(MeasureError::LengthMismatch {
                what: "payoff",
                expected: self.len(),
                got: values.len(),
            });
        }
        check_finite(values, "payoff")?;
        if let Some(i) = values.iter().position(|v| *v < T::zero()) {
            return Err(MeasureError::NegativePayoff(i));
        }
        let mut pairs: Vec<(T, T)> = values.iter().cloned().zip(self.masses.iter().cloned()).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        let mut atoms: Vec<T> = Vec::with_capacity(pairs.len());
        let mut masses: Vec<T> = Vec::with_capacity(pairs.len());
        for (v, m) in pairs {
            match atoms.last() {
                Some(last) if *last == v => *masses.last_mut().expect("parallel vectors") += &m,
                _ => {
                    atoms.push(v);
                    masses.push(m);
                }
            }
        }
        Ok(Self { atoms, masses })
    }
}

/// Payoff of a derivative, one nonnegative value per grid atom.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffProfile<T>(Vec<T>);

impl<T: Scalar> PayoffProfile<T> {
    pub fn new(values: Vec<T>) -> Result<Self, MeasureError> {
        check_finite(&values, "payoff")?;
        if let Some(i) = values.iter().position(|v| *v < T::zero()) {
            return Err(MeasureError::NegativePayoff(i));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn into_values(self) -> Vec<T> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Objective measure `μ` and pricing measure `ν` on a shared grid, with the
/// pricing kernel `π_i = ν_i / μ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketModel<T> {
    grid: Vec<T>,
    mu: Vec<T>,
    nu: Vec<T>,
    kernel: Vec<T>,
}

pub fn new_market<T: Scalar>(atoms: Vec<T>, mu: Vec<T>, nu: Vec<T>) -> Result<MarketModel<T>, MeasureError> {
    MarketModel::new(atoms, mu, nu)
}

impl<T: Scalar> MarketModel<T> {
    pub fn new(atoms: Vec<T>, mu: Vec<T>, nu: Vec<T>) -> Result<Self, MeasureError> {
        for (what, got) in [("mu", mu.len()), ("nu", nu.len())] {
            if got != atoms.len() {
                return Err(MeasureError::LengthMismatch {
                    what,
                    expected: atoms.len(),
                    got,
                });
            }
        }
        check_atoms(&atoms)?;
        check_masses(&mu, "mu")?;
        check_masses(&nu, "nu")?;
        let total: T = mu.iter().cloned().sum();
        if !total.eq_tol(&T::one(), tol::COMPARE) {
            return Err(MeasureError::MuNotProbability(total.to_exact_string()));
        }
        let kernel = nu.iter().zip(&mu).map(|(n, m)| n.clone() / m).collect();
        Ok(Self {
            grid: atoms,
            mu,
            nu,
            kernel,
        })
    }

    pub fn atoms(&self) -> &[T] {
        &self.grid
    }

    pub fn mu(&self) -> &[T] {
        &self.mu
    }

    pub fn nu(&self) -> &[T] {
        &self.nu
    }

    pub fn kernel(&self) -> &[T] {
        &self.kernel
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn objective_measure(&self) -> DiscreteMeasure<T> {
        DiscreteMeasure {
            atoms: self.grid.clone(),
            masses: self.mu.clone(),
        }
    }

    pub fn pricing_measure(&self) -> DiscreteMeasure<T> {
        DiscreteMeasure {
            atoms: self.grid.clone(),
            masses: self.nu.clone(),
        }
    }

    /// Distribution of `π(X)` under `μ`.
    pub fn kernel_distribution(&self) -> DiscreteMeasure<T> {
        self.objective_measure()
            .map_values(&self.kernel)
            .expect("kernel is positive and finite")
    }

    /// Nonincreasing kernel across the sorted grid.
    pub fn is_kernel_monotone(&self) -> bool {
        self.kernel.windows(2).all(|w| w[1].le_tol(&w[0], tol::COMPARE))
    }

    /// All objective masses equal.
    pub fn is_adequate(&self) -> bool {
        self.mu.iter().all(|m| m.eq_tol(&self.mu[0], tol::COMPARE))
    }

    pub fn identity(&self) -> PayoffProfile<T> {
        PayoffProfile(self.grid.clone())
    }

    /// `Σ ν_i x_i`.
    pub fn market_price(&self) -> T {
        self.grid.iter().zip(&self.nu).map(|(x, n)| x.clone() * n).sum()
    }

    /// `Σ ν_i θ_i`.
    pub fn price(&self, theta: &PayoffProfile<T>) -> Result<T, MeasureError> {
        self.price_values(theta.values())
    }

    pub fn price_values(&self, theta: &[T]) -> Result<T, MeasureError> {
        if theta.len() != self.len() {
            return Err(MeasureError::LengthMismatch {
                what: "payoff",
                expected: self.len(),
                got: theta.len(),
            });
        }
        Ok(theta.iter().zip(&self.nu).map(|(t, n)| t.clone() * n).sum())
    }

    /// Distribution of `θ(X)` under `μ`.
    pub fn pushforward(&self, theta: &PayoffProfile<T>) -> Result<DiscreteMeasure<T>, MeasureError> {
        self.objective_measure().map_values(theta.values())
    }

    /// Same model with every number converted to `f64`.
    pub fn to_float(&self) -> MarketModel<f64> {
        let conv = |v: &[T]| v.iter().map(Scalar::to_f64).collect::<Vec<f64>>();
        MarketModel {
            grid: conv(&self.grid),
            mu: conv(&self.mu),
            nu: conv(&self.nu),
            kernel: self
                .nu
                .iter()
                .zip(&self.mu)
                .map(|(n, m)| n.to_f64() / m.to_f64())
                .collect(),
        }
    }
}
