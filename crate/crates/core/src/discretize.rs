//! From continuous densities to discrete markets, and back to the continuous
//! optimal measure preserving derivative.
//!
//! Densities and kernels are tabulated and interpolated linearly between
//! samples. Cell masses are exact integrals of the interpolated density
//! (trapezoids cut at cell edges). The continuous derivative works in the
//! same piecewise-linear model: the distribution function is linear between
//! samples, the kernel is linear between samples, and `F_π` is the exact
//! measure of `{s : π(s) <= z}` in that model. Inversion of distribution
//! functions interpolates linearly and takes the leftmost point on ties.

use std::cmp::Ordering;

use sdarb_lp::{tol, Scalar, SolveStatus};
use thiserror::Error;

use crate::arbitrage::{min_price_with, ArbitrageError, MinPriceOptions};
use crate::measures::{DiscreteMeasure, MarketModel, MeasureError, PayoffProfile};
use crate::orders::OrderRelation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscretizeError {
    #[error("a table needs at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample points must be strictly increasing (index {0})")]
    NonIncreasingGrid(usize),
    #[error("density is negative or non-finite at sample {0}")]
    InvalidDensity(usize),
    #[error("density table carries no mass")]
    EmptyMass,
    #[error("cell {0} carries no mass")]
    EmptyCell(usize),
    #[error("need at least two cells, got {0}")]
    TooFewCells(usize),
    #[error("invalid range [{0}, {1}]")]
    InvalidRange(String, String),
    #[error("kernel is not strictly positive at {0}")]
    NonpositiveKernel(String),
    #[error("kernel takes the value {0} at more than one sample point")]
    FlatKernelRegion(String),
    #[error("cell counts must be strictly increasing")]
    UnsortedCellCounts,
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Arbitrage(#[from] ArbitrageError),
}

/// Function given by samples, linear in between and constant beyond the ends.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear<T> {
    xs: Vec<T>,
    ys: Vec<T>,
}

impl<T: Scalar> PiecewiseLinear<T> {
    pub fn new(xs: Vec<T>, ys: Vec<T>) -> Result<Self, DiscretizeError> {
        if xs.len() < 2 || ys.len() != xs.len() {
            return Err(DiscretizeError::TooFewSamples(xs.len().min(ys.len())));
        }
        if let Some(k) = xs.windows(2).position(|w| w[0] >= w[1]) {
            return Err(DiscretizeError::NonIncreasingGrid(k + 1));
        }
        Ok(Self { xs, ys })
    }

    pub fn xs(&self) -> &[T] {
        &self.xs
    }

    pub fn ys(&self) -> &[T] {
        &self.ys
    }

    /// Index `k` of the segment `[x_k, x_{k+1}]` containing `x` (clamped).
    fn segment(&self, x: &T) -> usize {
        self.xs.partition_point(|v| v <= x).clamp(1, self.xs.len() - 1) - 1
    }

    pub fn eval(&self, x: &T) -> T {
        let last = self.xs.len() - 1;
        if *x <= self.xs[0] {
            return self.ys[0].clone();
        }
        if *x >= self.xs[last] {
            return self.ys[last].clone();
        }
        let k = self.segment(x);
        let t = (x.clone() - &self.xs[k]) / (self.xs[k + 1].clone() - &self.xs[k]);
        self.ys[k].clone() + t * (self.ys[k + 1].clone() - &self.ys[k])
    }

    /// `∫_{x_0}^{x} f` for `x` inside the sample range.
    fn integral_to(&self, x: &T, cumulative: &[T]) -> T {
        let k = self.segment(x);
        let two = T::from_i64(2);
        let width = x.clone() - &self.xs[k];
        cumulative[k].clone() + width * (self.ys[k].clone() + self.eval(x)) / two
    }

    /// Trapezoid integrals up to each sample.
    fn cumulative(&self) -> Vec<T> {
        let two = T::from_i64(2);
        let mut acc = T::zero();
        let mut out = vec![T::zero()];
        for k in 0..self.xs.len() - 1 {
            acc += &((self.xs[k + 1].clone() - &self.xs[k]) * (self.ys[k].clone() + &self.ys[k + 1]) / &two);
            out.push(acc.clone());
        }
        out
    }
}

/// A tabulated probability density on `[grid_0, grid_last]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTable<T> {
    pdf: PiecewiseLinear<T>,
    cumulative: Vec<T>,
}

impl<T: Scalar> DensityTable<T> {
    pub fn new(grid: Vec<T>, pdf: Vec<T>) -> Result<Self, DiscretizeError> {
        if grid.len() < 2 || pdf.len() != grid.len() {
            return Err(DiscretizeError::TooFewSamples(grid.len().min(pdf.len())));
        }
        if let Some(k) = pdf.iter().position(|p| !p.is_finite() || *p < T::zero()) {
            return Err(DiscretizeError::InvalidDensity(k));
        }
        let pdf = PiecewiseLinear::new(grid, pdf)?;
        let cumulative = pdf.cumulative();
        if cumulative.last().is_none_or(|m| *m <= T::zero()) {
            return Err(DiscretizeError::EmptyMass);
        }
        Ok(Self { pdf, cumulative })
    }

    pub fn grid(&self) -> &[T] {
        self.pdf.xs()
    }

    pub fn values(&self) -> &[T] {
        self.pdf.ys()
    }

    pub fn lower(&self) -> &T {
        &self.grid()[0]
    }

    pub fn upper(&self) -> &T {
        &self.grid()[self.grid().len() - 1]
    }

    pub fn total_mass(&self) -> T {
        self.cumulative[self.cumulative.len() - 1].clone()
    }

    /// Mass of `(-∞, x]`, clamped to the table.
    pub fn mass_below(&self, x: &T) -> T {
        if x <= self.lower() {
            T::zero()
        } else if x >= self.upper() {
            self.total_mass()
        } else {
            self.pdf.integral_to(x, &self.cumulative)
        }
    }

    /// Mass of each sample segment.
    pub fn segment_masses(&self) -> Vec<T> {
        self.cumulative.windows(2).map(|w| w[1].clone() - &w[0]).collect()
    }
}

/// `n` equal cells over the table's range.
pub fn discretize_density<T: Scalar>(d: &DensityTable<T>, n: usize) -> Result<DiscreteMeasure<T>, DiscretizeError> {
    discretize_density_on(d, n, d.lower(), d.upper())
}

/// `n` equal cells over `[a, b]` with atoms at the cell centres; table mass
/// below `a` or above `b` goes to the first or last cell; masses are then
/// normalized to one.
pub fn discretize_density_on<T: Scalar>(
    d: &DensityTable<T>,
    n: usize,
    a: &T,
    b: &T,
) -> Result<DiscreteMeasure<T>, DiscretizeError> {
    if n < 2 {
        return Err(DiscretizeError::TooFewCells(n));
    }
    if a >= b {
        return Err(DiscretizeError::InvalidRange(a.to_exact_string(), b.to_exact_string()));
    }
    let count = T::from_i64(n as i64);
    let width = (b.clone() - a) / &count;
    let two = T::from_i64(2);
    let edge = |k: usize| -> T {
        match k {
            0 => a.clone(),
            k if k == n => b.clone(),
            k => a.clone() + width.clone() * T::from_i64(k as i64),
        }
    };
    let mut below: Vec<T> = (0..=n).map(|k| d.mass_below(&edge(k))).collect();
    below[0] = T::zero();
    below[n] = d.total_mass();
    let raw: Vec<T> = below.windows(2).map(|w| w[1].clone() - &w[0]).collect();
    if let Some(k) = raw.iter().position(|m| *m <= T::zero()) {
        return Err(DiscretizeError::EmptyCell(k));
    }
    let total: T = raw.iter().cloned().sum();
    let mut masses: Vec<T> = raw.iter().map(|m| m.clone() / &total).collect();
    if !T::is_exact() {
        // Put the rounding residue on the heaviest cell so the sum is 1.
        let heaviest = (0..n)
            .max_by(|&i, &j| masses[i].total_cmp(&masses[j]).then(j.cmp(&i)))
            .expect("n >= 2");
        let rest: T = (0..n).filter(|&k| k != heaviest).map(|k| masses[k].clone()).sum();
        masses[heaviest] = T::one() - rest;
    }
    let atoms = (0..n).map(|k| (edge(k) + edge(k + 1)) / &two).collect();
    Ok(DiscreteMeasure::new(atoms, masses)?)
}

/// `ν{x_i} = π(x_i) μ{x_i}`, deliberately not renormalized.
pub fn risk_neutral_from_kernel<T: Scalar>(
    mu: &DiscreteMeasure<T>,
    kernel_at: impl Fn(&T) -> T,
) -> Result<DiscreteMeasure<T>, DiscretizeError> {
    let masses = mu
        .atoms()
        .iter()
        .zip(mu.masses())
        .map(|(x, m)| {
            let k = kernel_at(x);
            if k.is_finite() && k > T::zero() {
                Ok(k * m)
            } else {
                Err(DiscretizeError::NonpositiveKernel(x.to_exact_string()))
            }
        })
        .collect::<Result<Vec<T>, _>>()?;
    Ok(DiscreteMeasure::new(mu.atoms().to_vec(), masses)?)
}

/// Market built from a discretized density and a kernel.
pub fn discrete_market<T: Scalar>(
    d: &DensityTable<T>,
    kernel_at: impl Fn(&T) -> T,
    n: usize,
) -> Result<MarketModel<T>, DiscretizeError> {
    let mu = discretize_density(d, n)?;
    let nu = risk_neutral_from_kernel(&mu, kernel_at)?;
    Ok(MarketModel::new(
        mu.atoms().to_vec(),
        mu.masses().to_vec(),
        nu.masses().to_vec(),
    )?)
}

/// The continuous derivative `ϑ(x) = Q(1 - F_π(π(x)))` in the
/// piecewise-linear model of `μ` and `π` on the density's sample grid.
#[derive(Debug, Clone)]
pub struct ContinuousOmpd {
    grid: Vec<f64>,
    /// Normalized distribution function at the samples.
    cdf: Vec<f64>,
    /// Normalized mass of each segment.
    segment_mass: Vec<f64>,
    kernel: PiecewiseLinear<f64>,
}

impl ContinuousOmpd {
    pub fn new(d: &DensityTable<f64>, kernel_at: impl Fn(f64) -> f64) -> Result<Self, DiscretizeError> {
        let grid = d.grid().to_vec();
        let values: Vec<f64> = grid.iter().map(|&x| kernel_at(x)).collect();
        if let Some(k) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(DiscretizeError::NonpositiveKernel(grid[k].to_exact_string()));
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(DiscretizeError::FlatKernelRegion(w[0].to_exact_string()));
        }
        let total = d.total_mass();
        let cdf = d.cumulative.iter().map(|c| c / total).collect();
        let segment_mass = d.segment_masses().iter().map(|m| m / total).collect();
        Ok(Self {
            kernel: PiecewiseLinear::new(grid.clone(), values)?,
            grid,
            cdf,
            segment_mass,
        })
    }

    pub fn kernel_at(&self, x: f64) -> f64 {
        self.kernel.eval(&x)
    }

    /// `μ{s : π(s) <= z}`; the density is uniform within each segment.
    pub fn kernel_cdf(&self, z: f64) -> f64 {
        let ys = self.kernel.ys();
        let mut acc = 0.0;
        for (k, mass) in self.segment_mass.iter().enumerate() {
            let (p0, p1) = (ys[k], ys[k + 1]);
            let fraction = if p0 <= z && p1 <= z {
                1.0
            } else if p0 > z && p1 > z {
                0.0
            } else if p0 <= z {
                (z - p0) / (p1 - p0)
            } else {
                (z - p1) / (p0 - p1)
            };
            acc += mass * fraction.clamp(0.0, 1.0);
        }
        acc.min(1.0)
    }

    /// Leftmost `x` with `F(x) >= u`, interpolating linearly.
    pub fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.grid[0];
        }
        let k = self.cdf.partition_point(|&c| c < u);
        if k >= self.cdf.len() {
            return self.grid[self.grid.len() - 1];
        }
        if k == 0 {
            return self.grid[0];
        }
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let t = ((u - c0) / (c1 - c0)).clamp(0.0, 1.0);
        self.grid[k - 1] + t * (self.grid[k] - self.grid[k - 1])
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.quantile(1.0 - self.kernel_cdf(self.kernel_at(x)))
    }
}

pub fn continuous_ompd(
    mu_density: &DensityTable<f64>,
    kernel_at: impl Fn(f64) -> f64,
    eval_points: &[f64],
) -> Result<PayoffProfile<f64>, DiscretizeError> {
    let c = ContinuousOmpd::new(mu_density, kernel_at)?;
    Ok(PayoffProfile::new(eval_points.iter().map(|&x| c.eval(x)).collect())?)
}

/// One `(n, relation)` row of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub relation: OrderRelation,
    pub atoms: Vec<f64>,
    pub minimizer: Vec<f64>,
    pub ompd: Vec<f64>,
    /// Price of `minimizer`: the optimum, or the best payoff found when the
    /// search stopped at its node limit.
    pub min_price: f64,
    /// Proven lower bound on the minimal price.
    pub lower_bound: f64,
    pub status: SolveStatus,
    pub market_price: f64,
    pub sup_gap: f64,
    pub nodes: usize,
}

/// Relations compared against the continuous derivative.
pub const STUDY_RELATIONS: [OrderRelation; 2] = [OrderRelation::FirstOrder, OrderRelation::SecondOrder];

pub fn convergence_study(
    mu_density: &DensityTable<f64>,
    kernel_at: impl Fn(f64) -> f64,
    n_list: &[usize],
) -> Result<Vec<ConvergenceRow>, DiscretizeError> {
    convergence_study_with(mu_density, kernel_at, n_list, &MinPriceOptions::default())
}

/// First-order minimization is a nested knapsack; when its search reaches the
/// node limit the row keeps the best payoff found, its status and the bound.
pub fn convergence_study_with(
    mu_density: &DensityTable<f64>,
    kernel_at: impl Fn(f64) -> f64,
    n_list: &[usize],
    options: &MinPriceOptions,
) -> Result<Vec<ConvergenceRow>, DiscretizeError> {
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DiscretizeError::UnsortedCellCounts);
    }
    let continuous = ContinuousOmpd::new(mu_density, &kernel_at)?;
    let mut rows = Vec::new();
    for &n in n_list {
        let market = discrete_market(mu_density, |x: &f64| kernel_at(*x), n)?;
        let ompd: Vec<f64> = market.atoms().iter().map(|&x| continuous.eval(x)).collect();
        for rel in STUDY_RELATIONS {
            let opt = min_price_with(&market, rel, options)?;
            let (theta, price, lower_bound) = match (opt.status, opt.theta, opt.incumbent) {
                (SolveStatus::Optimal, Some(theta), _) => {
                    let price = *opt.price.as_ref().expect("optimal has price");
                    (theta.into_values(), price, price)
                }
                (SolveStatus::NodeLimit, _, Some(best)) => {
                    let price = market.price(&best)?;
                    let bound = opt.root_bound.unwrap_or(f64::NEG_INFINITY);
                    (best.into_values(), price, bound)
                }
                (status, _, _) => return Err(ArbitrageError::Solver(status.name()).into()),
            };
            let sup_gap = theta.iter().zip(&ompd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            rows.push(ConvergenceRow {
                n,
                relation: rel,
                atoms: market.atoms().to_vec(),
                minimizer: theta,
                ompd: ompd.clone(),
                min_price: price,
                lower_bound,
                status: opt.status,
                market_price: market.market_price(),
                sup_gap,
                nodes: opt.nodes,
            });
        }
    }
    Ok(rows)
}

/// Whether the gaps of `rel` never increase along the study.
pub fn gaps_nonincreasing(rows: &[ConvergenceRow], rel: OrderRelation) -> bool {
    let gaps: Vec<f64> = rows.iter().filter(|r| r.relation == rel).map(|r| r.sup_gap).collect();
    gaps.windows(2)
        .all(|w| w[1].partial_cmp(&w[0]) != Some(Ordering::Greater) || w[1].eq_tol(&w[0], tol::COMPARE))
}
