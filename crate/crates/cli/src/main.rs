//! `sdarb`: inspect markets, minimize dominating payoffs, build the optimal
//! measure preserving derivative, run discretization studies and property
//! suites.
//!
//! Exit codes: 0 success, 1 bad input, 2 solver failure, 3 property violation.
//! `SD_ARB_MODE` selects `rational` (default) or `float` arithmetic.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sdarb::arbitrage::Formulation;
use sdarb::checks::Suite;
use sdarb::orders::OrderRelation;

#[derive(Debug, Parser)]
#[command(name = "sdarb", version, about = "Stochastic arbitrage on discrete payoff grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the kernel, its monotonicity, adequacy, market price and lower bound.
    Inspect {
        market: PathBuf,
        /// Emit JSON instead of `key: value` lines.
        #[arg(long)]
        json: bool,
    },
    /// Cheapest payoff standing in the given order to the market.
    Minimize {
        market: PathBuf,
        #[arg(long, value_parser = parse_order)]
        order: OrderRelation,
        /// Report file (JSON); stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "auto", value_parser = parse_formulation)]
        formulation: Formulation,
        /// Also write the explicit LP/MILP in plain-text standard form.
        #[arg(long)]
        dump_program: Option<PathBuf>,
    },
    /// Optimal measure preserving derivative as a two-column TSV.
    Ompd {
        market: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discretize a density at several grid sizes and compare minimizers with
    /// the continuous derivative.
    Illustrate {
        /// CSV with columns x, pdf.
        density: PathBuf,
        /// CSV with columns x, kernel.
        kernel: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "5,20,80")]
        n_list: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the shipped synthetic density and kernels as CSV tables.
    Synthetic {
        #[arg(long)]
        out: PathBuf,
        /// Alternative configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a seeded randomized property suite, or its checks on one market.
    Check {
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = sdarb::checks::DEFAULT_SEED)]
        seed: u64,
        /// Check this market instead of random ones.
        #[arg(long)]
        market: Option<PathBuf>,
    },
}

fn parse_order(s: &str) -> Result<OrderRelation, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse()
}

fn parse_formulation(s: &str) -> Result<Formulation, String> {
    match s {
        "auto" => Ok(Formulation::Auto),
        "explicit" => Ok(Formulation::Explicit),
        "compact" => Ok(Formulation::Compact),
        _ => Err(format!(
            "unknown formulation {s:?} (expected auto, explicit or compact)"
        )),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { commands::EXIT_INPUT } else { 0 });
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("sdarb: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
