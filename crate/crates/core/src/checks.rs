//! Seeded randomized property suites over small exact markets.
//!
//! Every instance is drawn from one ChaCha stream, so a suite run is fully
//! determined by its seed. Instances are built from small rationals and
//! converted to the requested arithmetic.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use sdarb_lp::{tol, Rational, Scalar};

use crate::arbitrage::{bound_chain, check_prop1, check_prop2, ArbitrageError};
use crate::io::{market_value, number_value};
use crate::measures::{DiscreteMeasure, MarketModel};
use crate::orders::{dominates_ssd, SsdMethod};
use crate::rearrangement::{hardy_littlewood_bounds, hardy_majorization_holds, is_comonotone, is_countermonotone};
use crate::step::{Continuity, StepFunction};

pub const DEFAULT_SEED: u64 = 20_240_229;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Prop1,
    Prop2,
    Lemmas,
    Chain,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Self::Prop1, Self::Prop2, Self::Lemmas, Self::Chain];

    pub fn name(self) -> &'static str {
        match self {
            Self::Prop1 => "prop1",
            Self::Prop2 => "prop2",
            Self::Lemmas => "lemmas",
            Self::Chain => "chain",
        }
    }

    pub fn default_trials(self) -> usize {
        match self {
            Self::Prop1 | Self::Chain => 1000,
            Self::Prop2 => 300,
            Self::Lemmas => 500,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| format!("unknown suite {s:?} (expected prop1, prop2, lemmas or chain)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    pub trials: usize,
    pub seed: u64,
    pub min_atoms: usize,
    pub max_atoms: usize,
    /// Largest grid whose Equal optimum is checked against every permutation.
    pub max_enumerated: usize,
}

impl CheckOptions {
    pub fn new(suite: Suite) -> Self {
        Self {
            trials: suite.default_trials(),
            seed: DEFAULT_SEED,
            min_atoms: 2,
            max_atoms: 8,
            max_enumerated: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tally {
    pub property: &'static str,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub property: &'static str,
    pub trial: usize,
    pub instance: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub trials: usize,
    pub seed: u64,
    pub tallies: Vec<Tally>,
    /// First failing instance of each property.
    pub counterexamples: Vec<Counterexample>,
}

impl SuiteReport {
    fn new(suite: Suite, trials: usize, seed: u64) -> Self {
        Self {
            suite,
            trials,
            seed,
            tallies: Vec::new(),
            counterexamples: Vec::new(),
        }
    }

    fn record(&mut self, property: &'static str, trial: usize, ok: bool, instance: impl FnOnce() -> Value) {
        let k = match self.tallies.iter().position(|t| t.property == property) {
            Some(k) => k,
            None => {
                self.tallies.push(Tally {
                    property,
                    passed: 0,
                    failed: 0,
                });
                self.tallies.len() - 1
            }
        };
        if ok {
            self.tallies[k].passed += 1;
        } else {
            if self.tallies[k].failed == 0 {
                self.counterexamples.push(Counterexample {
                    property,
                    trial,
                    instance: instance(),
                });
            }
            self.tallies[k].failed += 1;
        }
    }

    pub fn violations(&self) -> usize {
        self.tallies.iter().map(|t| t.failed).sum()
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn cast<T: Scalar>(r: &Rational) -> T {
    T::parse_exact(&r.to_string()).expect("rationals parse in every mode")
}

fn cast_all<T: Scalar>(v: &[Rational]) -> Vec<T> {
    v.iter().map(cast).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum KernelShape {
    Free,
    Monotone,
    Constant,
}

/// Random instance generator on half-integer grids.
pub struct Generator {
    rng: ChaCha8Rng,
    min_atoms: usize,
    max_atoms: usize,
}

impl Generator {
    pub fn new(seed: u64, min_atoms: usize, max_atoms: usize) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            min_atoms,
            max_atoms,
        }
    }

    fn size(&mut self) -> usize {
        self.rng.gen_range(self.min_atoms..=self.max_atoms)
    }

    fn atoms(&mut self, n: usize) -> Vec<Rational> {
        let mut x = self.rng.gen_range(0..=3i64);
        (0..n)
            .map(|k| {
                if k > 0 {
                    x += self.rng.gen_range(1..=3i64);
                }
                q(x, 2)
            })
            .collect()
    }

    fn probabilities(&mut self, n: usize, equal: bool) -> Vec<Rational> {
        if equal {
            return vec![q(1, n as i64); n];
        }
        let w: Vec<i64> = (0..n).map(|_| self.rng.gen_range(1..=9)).collect();
        let total: i64 = w.iter().sum();
        w.iter().map(|&w| q(w, total)).collect()
    }

    fn kernel(&mut self, n: usize) -> Vec<Rational> {
        let shape = match self.rng.gen_range(0..6) {
            0 | 1 => KernelShape::Monotone,
            2 => KernelShape::Constant,
            _ => KernelShape::Free,
        };
        let mut k: Vec<i64> = (0..n).map(|_| self.rng.gen_range(1..=12)).collect();
        match shape {
            KernelShape::Monotone => k.sort_unstable_by(|a, b| b.cmp(a)),
            KernelShape::Constant => k = vec![k[0]; n],
            KernelShape::Free => {}
        }
        k.into_iter().map(|v| q(v, 4)).collect()
    }

    pub fn market(&mut self, equal: bool) -> MarketModel<Rational> {
        let n = self.size();
        let atoms = self.atoms(n);
        let mu = self.probabilities(n, equal);
        let nu = self.kernel(n).iter().zip(&mu).map(|(k, m)| k * m).collect();
        MarketModel::new(atoms, mu, nu).expect("generated markets are valid")
    }

    pub fn measure(&mut self) -> DiscreteMeasure<Rational> {
        let n = self.size();
        let atoms = self.atoms(n);
        let equal = self.rng.gen_bool(0.25);
        let masses = self.probabilities(n, equal);
        DiscreteMeasure::new(atoms, masses).expect("generated measures are valid")
    }

    /// A measure that second-order dominates `d`: contracted toward its mean
    /// and shifted up.
    pub fn dominating(&mut self, d: &DiscreteMeasure<Rational>) -> DiscreteMeasure<Rational> {
        let lambda = q(self.rng.gen_range(1..=4), 4);
        let shift = q(self.rng.gen_range(0..=2), 2);
        let mean = d.mean();
        let atoms = d
            .atoms()
            .iter()
            .map(|x| mean.clone() + &(lambda.clone() * &(x.clone() - &mean)) + &shift)
            .collect();
        DiscreteMeasure::new(atoms, d.masses().to_vec()).expect("positive contraction keeps the order")
    }

    pub fn payoff(&mut self, n: usize) -> Vec<Rational> {
        (0..n).map(|_| q(self.rng.gen_range(0..=6), 1)).collect()
    }

    /// Nonincreasing, nonnegative step function on `[0, 1]`.
    pub fn weight(&mut self) -> StepFunction<Rational> {
        let pieces = self.rng.gen_range(1..=4usize);
        let mut cuts: Vec<i64> = (0..pieces - 1).map(|_| self.rng.gen_range(1..12)).collect();
        cuts.sort_unstable();
        cuts.dedup();
        let mut values: Vec<i64> = (0..=cuts.len()).map(|_| self.rng.gen_range(0..=5)).collect();
        values.sort_unstable_by(|a, b| b.cmp(a));
        StepFunction::new(
            cuts.into_iter().map(|c| q(c, 12)).collect(),
            values.into_iter().map(|v| q(v, 1)).collect(),
            Continuity::Right,
        )
        .expect("cuts are increasing")
    }

    pub fn coin(&mut self) -> bool {
        self.rng.gen_bool(0.5)
    }
}

fn measure_value<T: Scalar>(d: &DiscreteMeasure<T>) -> Value {
    json!({
        "atoms": d.atoms().iter().map(number_value).collect::<Vec<_>>(),
        "masses": d.masses().iter().map(number_value).collect::<Vec<_>>(),
    })
}

fn cast_market<T: Scalar>(m: &MarketModel<Rational>) -> MarketModel<T> {
    MarketModel::new(cast_all(m.atoms()), cast_all(m.mu()), cast_all(m.nu())).expect("cast keeps validity")
}

fn cast_measure<T: Scalar>(d: &DiscreteMeasure<Rational>) -> DiscreteMeasure<T> {
    DiscreteMeasure::new(cast_all(d.atoms()), cast_all(d.masses())).expect("cast keeps validity")
}

fn cast_step<T: Scalar>(s: &StepFunction<Rational>) -> StepFunction<T> {
    StepFunction::new(cast_all(s.breakpoints()), cast_all(s.values()), s.continuity()).expect("cast keeps validity")
}

/// Cheapest rearrangement of the market payoff, by enumerating permutations.
pub fn enumerate_equal_min<T: Scalar>(m: &MarketModel<T>) -> T {
    (0..m.len())
        .permutations(m.len())
        .map(|p| {
            p.iter()
                .zip(m.nu())
                .map(|(&k, nu)| nu.clone() * &m.atoms()[k])
                .sum::<T>()
        })
        .min_by(|a, b| a.total_cmp(b))
        .expect("at least one permutation")
}

fn prop1_checks<T: Scalar>(report: &mut SuiteReport, trial: usize, m: &MarketModel<T>) -> Result<(), ArbitrageError> {
    let p = check_prop1(m)?;
    report.record("kernel_monotonicity_equivalence", trial, p.holds(), || market_value(m));
    Ok(())
}

fn prop2_checks<T: Scalar>(
    report: &mut SuiteReport,
    trial: usize,
    m: &MarketModel<T>,
    max_enumerated: usize,
) -> Result<(), ArbitrageError> {
    let p = check_prop2(m)?;
    report.record("minima_agree", trial, p.minima_agree(), || market_value(m));
    report.record("assignment_root_integral", trial, p.equal_nodes == 1, || {
        market_value(m)
    });
    report.record(
        "ompd_distribution_preserved",
        trial,
        p.ompd_distribution_preserved,
        || market_value(m),
    );
    report.record("ompd_countermonotone", trial, p.ompd_countermonotone, || {
        market_value(m)
    });
    report.record("kernel_monotonicity_equivalence", trial, p.prop1.holds(), || {
        market_value(m)
    });
    if m.len() <= max_enumerated {
        let best = enumerate_equal_min(m);
        report.record(
            "equal_vs_permutations",
            trial,
            best.eq_tol(&p.equal_price, tol::COMPARE),
            || market_value(m),
        );
    }
    Ok(())
}

fn chain_checks<T: Scalar>(report: &mut SuiteReport, trial: usize, m: &MarketModel<T>) -> Result<(), ArbitrageError> {
    let chain = bound_chain(m)?;
    report.record("bound_chain", trial, chain.holds(), || market_value(m));
    Ok(())
}

/// Quantile of the distribution function never exceeds the point, on and
/// between atoms and above the support.
fn quantile_below_identity<T: Scalar>(d: &DiscreteMeasure<T>) -> bool {
    let quantile = d.quantile().expect("probability");
    let two = T::from_i64(2);
    let atoms = d.atoms();
    let mut points = atoms.to_vec();
    points.extend(atoms.windows(2).map(|w| (w[0].clone() + &w[1]) / &two));
    points.push(atoms[atoms.len() - 1].clone() + &T::one());
    points
        .iter()
        .all(|x| quantile.eval(&d.cdf_at(x)).le_tol(x, tol::COMPARE))
}

/// `μ{F(X) <= u} = u` for every `u` in the range of `F`.
fn probability_integral_transform<T: Scalar>(d: &DiscreteMeasure<T>) -> bool {
    let cumulative = d.cumulative();
    cumulative.iter().all(|u| {
        let mass: T = cumulative
            .iter()
            .zip(d.masses())
            .filter(|(f, _)| f.le_tol(u, tol::COMPARE))
            .map(|(_, m)| m.clone())
            .sum();
        mass.eq_tol(u, tol::COMPARE)
    })
}

fn lemma_checks<T: Scalar>(report: &mut SuiteReport, trial: usize, g: &mut Generator) -> Result<(), ArbitrageError> {
    let d_exact = g.measure();
    let d = cast_measure::<T>(&d_exact);
    report.record("quantile_below_identity", trial, quantile_below_identity(&d), || {
        measure_value(&d)
    });
    report.record(
        "probability_integral_transform",
        trial,
        probability_integral_transform(&d),
        || measure_value(&d),
    );

    let other = if g.coin() { g.dominating(&d_exact) } else { g.measure() };
    let d1 = cast_measure::<T>(&other);
    let verdicts: Vec<bool> = SsdMethod::ALL
        .iter()
        .map(|&method| dominates_ssd(&d1, &d, method))
        .collect();
    report.record(
        "ssd_methods_agree",
        trial,
        verdicts.iter().all_equal(),
        || json!({ "d1": measure_value(&d1), "d2": measure_value(&d) }),
    );

    let better = cast_measure::<T>(&g.dominating(&d_exact));
    let weight = cast_step::<T>(&g.weight());
    let q1 = better.quantile()?;
    let q2 = d.quantile()?;
    let constructed = dominates_ssd(&better, &d, SsdMethod::QuantileIntegral);
    let majorized = constructed && hardy_majorization_holds(&q1, &q2, &weight).unwrap_or(false);
    report.record("weighted_majorization", trial, majorized, || {
        json!({
            "d1": measure_value(&better),
            "d2": measure_value(&d),
            "g_breakpoints": weight.breakpoints().iter().map(number_value).collect::<Vec<_>>(),
            "g_values": weight.values().iter().map(number_value).collect::<Vec<_>>(),
        })
    });

    let m = cast_market::<T>(&g.market(false));
    let n = m.len();
    let f = cast_all::<T>(&g.payoff(n));
    let h = cast_all::<T>(&g.payoff(n));
    let instance = |f: &[T], h: &[T]| {
        json!({
            "market": market_value(&m),
            "f": f.iter().map(number_value).collect::<Vec<_>>(),
            "g": h.iter().map(number_value).collect::<Vec<_>>(),
        })
    };
    let bracket = hardy_littlewood_bounds(&m, &f, &h)?;
    // Arrange the values of `h` in the same and in the opposite order as `f`.
    let ranks: Vec<usize> = (0..n)
        .sorted_by(|&i, &j| f[i].total_cmp(&f[j]).then(i.cmp(&j)))
        .collect();
    let sorted: Vec<T> = h.iter().cloned().sorted_by(|a, b| a.total_cmp(b)).collect();
    let mut co = vec![T::zero(); n];
    let mut counter = vec![T::zero(); n];
    for (r, &i) in ranks.iter().enumerate() {
        co[i] = sorted[r].clone();
        counter[i] = sorted[n - 1 - r].clone();
    }
    let co_bracket = hardy_littlewood_bounds(&m, &f, &co)?;
    let counter_bracket = hardy_littlewood_bounds(&m, &f, &counter)?;
    let ok = bracket.holds()
        && is_comonotone(&m, &f, &co)?
        && is_countermonotone(&m, &f, &counter)?
        && co_bracket.actual.eq_tol(&co_bracket.upper, tol::COMPARE)
        && counter_bracket.actual.eq_tol(&counter_bracket.lower, tol::COMPARE);
    report.record("rearrangement_bounds", trial, ok, || instance(&f, &h));
    Ok(())
}

/// Runs `suite` on `options.trials` random instances.
pub fn run_suite<T: Scalar>(suite: Suite, options: &CheckOptions) -> Result<SuiteReport, ArbitrageError> {
    let mut g = Generator::new(options.seed, options.min_atoms, options.max_atoms);
    let mut report = SuiteReport::new(suite, options.trials, options.seed);
    for trial in 0..options.trials {
        match suite {
            Suite::Prop1 => prop1_checks(&mut report, trial, &cast_market::<T>(&g.market(false)))?,
            Suite::Prop2 => prop2_checks(
                &mut report,
                trial,
                &cast_market::<T>(&g.market(true)),
                options.max_enumerated,
            )?,
            Suite::Lemmas => lemma_checks::<T>(&mut report, trial, &mut g)?,
            Suite::Chain => {
                let equal = g.coin();
                chain_checks(&mut report, trial, &cast_market::<T>(&g.market(equal)))?
            }
        }
    }
    Ok(report)
}

/// Runs the model-level checks of `suite` on one given market.
pub fn check_market<T: Scalar>(suite: Suite, m: &MarketModel<T>) -> Result<SuiteReport, ArbitrageError> {
    let mut report = SuiteReport::new(suite, 1, 0);
    match suite {
        Suite::Prop1 => prop1_checks(&mut report, 0, m)?,
        Suite::Prop2 => prop2_checks(&mut report, 0, m, 6)?,
        Suite::Chain => chain_checks(&mut report, 0, m)?,
        Suite::Lemmas => {
            let d = m.objective_measure();
            report.record("quantile_below_identity", 0, quantile_below_identity(&d), || {
                measure_value(&d)
            });
            report.record(
                "probability_integral_transform",
                0,
                probability_integral_transform(&d),
                || measure_value(&d),
            );
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(suite: Suite, trials: usize) -> CheckOptions {
        CheckOptions {
            trials,
            ..CheckOptions::new(suite)
        }
    }

    #[test]
    fn suites_pass_on_small_runs() {
        for suite in Suite::ALL {
            let report = run_suite::<Rational>(suite, &small(suite, 40)).unwrap();
            assert!(report.passed(), "{suite}: {:?}", report.counterexamples);
            assert!(report.tallies.iter().all(|t| t.passed + t.failed > 0));
        }
    }

    #[test]
    fn same_seed_same_report() {
        let a = run_suite::<Rational>(Suite::Chain, &small(Suite::Chain, 20)).unwrap();
        let b = run_suite::<Rational>(Suite::Chain, &small(Suite::Chain, 20)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generator_covers_both_kernel_kinds() {
        let mut g = Generator::new(DEFAULT_SEED, 2, 8);
        let monotone = (0..200).filter(|_| g.market(false).is_kernel_monotone()).count();
        assert!(monotone > 20 && monotone < 180, "{monotone}");
    }

    #[test]
    fn dominating_measures_dominate() {
        let mut g = Generator::new(7, 2, 8);
        for _ in 0..100 {
            let d = g.measure();
            let better = g.dominating(&d);
            assert!(SsdMethod::ALL.iter().all(|&m| dominates_ssd(&better, &d, m)));
        }
    }

    #[test]
    fn prop2_rejects_unequal_masses() {
        let m = MarketModel::new(vec![q(1, 1), q(2, 1)], vec![q(2, 3), q(1, 3)], vec![q(1, 3), q(2, 3)]).unwrap();
        assert_eq!(
            check_market(Suite::Prop2, &m),
            Err(ArbitrageError::PreconditionInadequate)
        );
        assert!(check_market(Suite::Prop1, &m).unwrap().passed());
    }

    #[test]
    fn permutation_oracle_on_example() {
        // Equal masses, kernel 3, 1, 2: the cheapest rearrangement pays the
        // smallest atom where the kernel is largest.
        let m = MarketModel::new(
            vec![q(1, 1), q(2, 1), q(3, 1)],
            vec![q(1, 3); 3],
            vec![q(1, 1), q(1, 3), q(2, 3)],
        )
        .unwrap();
        assert_eq!(enumerate_equal_min(&m), q(1, 1) + q(3, 3) + q(4, 3));
    }

    #[test]
    fn suite_names_parse() {
        for suite in Suite::ALL {
            assert_eq!(suite.name().parse::<Suite>().unwrap(), suite);
        }
        assert!("prop3".parse::<Suite>().is_err());
    }
}
