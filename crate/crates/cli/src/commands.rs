use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use sdarb::arbitrage::{explicit_program, min_price_with, ArbitrageError, MinPriceOptions};
use sdarb::checks::{check_market, run_suite, CheckOptions, SuiteReport};
use sdarb::discretize::{convergence_study, ContinuousOmpd, DiscretizeError};
use sdarb::io::{self as sio, IoError};
use sdarb::measures::MarketModel;
use sdarb::ompd::ompd;
use sdarb::rearrangement::dybvig_bound;
use sdarb::synthetic::{ConfigError, SyntheticConfig};
use sdarb::{Mode, Rational, Scalar};

use crate::Command;

pub const EXIT_INPUT: u8 = 1;
pub const EXIT_SOLVER: u8 = 2;
pub const EXIT_VIOLATION: u8 = 3;

pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<ArbitrageError> for Failure {
    fn from(e: ArbitrageError) -> Self {
        let code = match e {
            ArbitrageError::Solver(_) | ArbitrageError::Program(_) => EXIT_SOLVER,
            ArbitrageError::Measure(_) | ArbitrageError::PreconditionInadequate => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<DiscretizeError> for Failure {
    fn from(e: DiscretizeError) -> Self {
        match e {
            DiscretizeError::Arbitrage(e) => e.into(),
            e => Self::input(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::input(format!("{}: {e}", path.display()))
}

fn mode() -> Result<Mode, Failure> {
    match std::env::var("SD_ARB_MODE") {
        Ok(v) => v.parse().map_err(Failure::input),
        Err(std::env::VarError::NotPresent) => Ok(Mode::Rational),
        Err(e) => Err(Failure::input(format!("SD_ARB_MODE: {e}"))),
    }
}

fn open(path: &Path) -> Result<File, Failure> {
    File::open(path).map_err(|e| io_failure(path, e))
}

fn load_market<T: Scalar>(path: &Path) -> Result<MarketModel<T>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    sio::parse_market(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Writes `text` to `out`, or to stdout when `out` is absent.
fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io_failure(path, e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::input(e.to_string())),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

fn join<T: Scalar>(values: &[T]) -> String {
    values.iter().map(Scalar::to_exact_string).collect::<Vec<_>>().join(" ")
}

fn inspect<T: Scalar>(path: &Path, json: bool) -> Result<(), Failure> {
    let m = load_market::<T>(path)?;
    let text = if json {
        sio::pretty(&sio::inspect_value(&m))
    } else {
        format!(
            "mode: {}\natoms: {}\nkernel: {}\nmonotone: {}\nadequate: {}\nmarket_price: {}\nbound: {}\n",
            T::MODE.name(),
            join(m.atoms()),
            join(m.kernel()),
            m.is_kernel_monotone(),
            m.is_adequate(),
            m.market_price().to_exact_string(),
            dybvig_bound(&m).to_exact_string(),
        )
    };
    emit(None, &text)
}

fn minimize<T: Scalar>(
    path: &Path,
    order: sdarb::orders::OrderRelation,
    out: Option<&Path>,
    options: &MinPriceOptions,
    dump: Option<&Path>,
) -> Result<(), Failure> {
    let m = load_market::<T>(path)?;
    if let Some(dump) = dump {
        let text = explicit_program(&m, order).program.to_text();
        fs::write(dump, text).map_err(|e| io_failure(dump, e))?;
    }
    let opt = min_price_with(&m, order, options)?;
    emit(out, &sio::pretty(&sio::optimum_value(&m, &opt)))?;
    if opt.is_optimal() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_SOLVER,
            message: format!("solver stopped with status {}", opt.status.name()),
        })
    }
}

fn ompd_table<T: Scalar>(path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let m = load_market::<T>(path)?;
    let theta = ompd(&m);
    let price = m.price(&theta).map_err(|e| Failure::input(e.to_string()))?;
    let mut text = format!("# price\t{}\natom\tompd\n", price.to_exact_string());
    for (x, t) in m.atoms().iter().zip(theta.values()) {
        text.push_str(&format!("{}\t{}\n", x.to_exact_string(), t.to_exact_string()));
    }
    emit(out, &text)
}

fn illustrate(density: &Path, kernel: &Path, n_list: &[usize], out: &Path) -> Result<(), Failure> {
    let density_table = sio::read_density(open(density)?)?;
    let kernel_table = sio::read_kernel(open(kernel)?)?;
    let kernel_at = |x: f64| kernel_table.eval(&x);
    let rows = convergence_study(&density_table, kernel_at, n_list)?;
    let continuous = ContinuousOmpd::new(&density_table, kernel_at)?;
    fs::create_dir_all(out).map_err(|e| io_failure(out, e))?;

    sio::write_gap_table(&rows, create(&out.join("gaps.tsv"))?)?;
    for &n in n_list {
        let of_n: Vec<_> = rows.iter().filter(|r| r.n == n).collect();
        sio::write_minimizers(&of_n, create(&out.join(format!("minimizers_n{n}.tsv")))?)?;
    }
    let grid = density_table.grid();
    let curve: Vec<f64> = grid.iter().map(|&x| continuous.eval(x)).collect();
    sio::write_curve(["x", "ompd"], grid, &curve, create(&out.join("ompd_curve.tsv"))?)?;

    let mut summary = String::new();
    for r in &rows {
        summary.push_str(&format!(
            "n={} {} status={} min_price={} market_price={} sup_gap={}\n",
            r.n,
            r.relation.short_name(),
            r.status.name(),
            r.min_price.to_exact_string(),
            r.market_price.to_exact_string(),
            r.sup_gap.to_exact_string(),
        ));
    }
    emit(None, &summary)
}

fn synthetic(out: &Path, config: Option<&Path>) -> Result<(), Failure> {
    let config = match config {
        Some(path) => SyntheticConfig::load(path)?,
        None => SyntheticConfig::default_config(),
    };
    let density = config.density()?;
    fs::create_dir_all(out).map_err(|e| io_failure(out, e))?;
    let grid = density.grid();
    let tables: [(&str, &str, Vec<f64>); 3] = [
        ("density.csv", "pdf", density.values().to_vec()),
        (
            "kernel.csv",
            "kernel",
            grid.iter().map(|&x| config.kernel.eval(x)).collect(),
        ),
        (
            "kernel_monotone.csv",
            "kernel",
            grid.iter().map(|&x| config.kernel.monotone().eval(x)).collect(),
        ),
    ];
    for (name, column, values) in tables {
        let path = out.join(name);
        let mut text = format!("x,{column}\n");
        for (x, v) in grid.iter().zip(&values) {
            text.push_str(&format!("{},{}\n", x.to_exact_string(), v.to_exact_string()));
        }
        fs::write(&path, text).map_err(|e| io_failure(&path, e))?;
    }
    Ok(())
}

fn print_report(report: &SuiteReport) -> Result<(), Failure> {
    let mut text = format!("suite {} seed {} trials {}\n", report.suite, report.seed, report.trials);
    for t in &report.tallies {
        let verdict = if t.failed == 0 { "pass" } else { "FAIL" };
        text.push_str(&format!(
            "{verdict} {}: {} passed, {} failed\n",
            t.property, t.passed, t.failed
        ));
    }
    for ce in &report.counterexamples {
        text.push_str(&format!(
            "counterexample {} (trial {}): {}\n",
            ce.property, ce.trial, ce.instance
        ));
    }
    text.push_str(&format!("violations: {}\n", report.violations()));
    emit(None, &text)
}

fn check<T: Scalar>(
    suite: sdarb::checks::Suite,
    trials: Option<usize>,
    seed: u64,
    market: Option<&Path>,
) -> Result<(), Failure> {
    let report = match market {
        Some(path) => check_market(suite, &load_market::<T>(path)?)?,
        None => {
            let mut options = CheckOptions::new(suite);
            options.seed = seed;
            if let Some(trials) = trials {
                options.trials = trials;
            }
            run_suite::<T>(suite, &options)?
        }
    };
    print_report(&report)?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VIOLATION,
            message: format!("{} property violations", report.violations()),
        })
    }
}

fn dispatch<T: Scalar>(command: Command) -> Result<(), Failure> {
    match command {
        Command::Inspect { market, json } => inspect::<T>(&market, json),
        Command::Minimize {
            market,
            order,
            out,
            formulation,
            dump_program,
        } => {
            let options = MinPriceOptions {
                formulation,
                ..MinPriceOptions::default()
            };
            minimize::<T>(&market, order, out.as_deref(), &options, dump_program.as_deref())
        }
        Command::Ompd { market, out } => ompd_table::<T>(&market, out.as_deref()),
        Command::Illustrate {
            density,
            kernel,
            n_list,
            out,
        } => illustrate(&density, &kernel, &n_list, &out),
        Command::Synthetic { out, config } => synthetic(&out, config.as_deref()),
        Command::Check {
            suite,
            trials,
            seed,
            market,
        } => check::<T>(suite, trials, seed, market.as_deref()),
    }
}

pub fn run(command: Command) -> Result<(), Failure> {
    match mode()? {
        Mode::Rational => dispatch::<Rational>(command),
        Mode::Float => dispatch::<f64>(command),
    }
}
