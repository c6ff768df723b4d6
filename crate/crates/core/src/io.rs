//! Reading and writing markets, reports and tables.
//!
//! Numbers are written losslessly: `"p/q"` strings in rational mode, JSON
//! numbers with 17 significant digits in float mode. Either form is accepted
//! on input in either mode.

use std::io::{Read, Write};
use std::str::FromStr;

use serde::Deserialize;
use serde_json::{json, Map, Number, Value};
use thiserror::Error;

use sdarb_lp::Scalar;

use crate::arbitrage::{BoundChain, PriceOptimum};
use crate::discretize::{ConvergenceRow, DensityTable, DiscretizeError, PiecewiseLinear};
use crate::measures::{MarketModel, MeasureError, PayoffProfile};
use crate::rearrangement::dybvig_bound;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed market file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{key}[{index}]: cannot read {text:?} as a number")]
    InvalidNumber {
        key: &'static str,
        index: usize,
        text: String,
    },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("table line {line}: {message}")]
    Table { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawNumber {
    Text(String),
    Number(Number),
}

impl RawNumber {
    fn text(&self) -> String {
        match self {
            Self::Text(s) => s.clone(),
            Self::Number(n) => n.to_string(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MarketFile {
    atoms: Vec<RawNumber>,
    mu: Vec<RawNumber>,
    nu: Vec<RawNumber>,
}

fn numbers<T: Scalar>(key: &'static str, raw: &[RawNumber]) -> Result<Vec<T>, IoError> {
    raw.iter()
        .enumerate()
        .map(|(index, r)| {
            let text = r.text();
            T::parse_exact(&text).ok_or(IoError::InvalidNumber { key, index, text })
        })
        .collect()
}

pub fn parse_market<T: Scalar>(text: &str) -> Result<MarketModel<T>, IoError> {
    let file: MarketFile = serde_json::from_str(text)?;
    let atoms = numbers("atoms", &file.atoms)?;
    let mu = numbers("mu", &file.mu)?;
    let nu = numbers("nu", &file.nu)?;
    Ok(MarketModel::new(atoms, mu, nu)?)
}

pub fn read_market<T: Scalar>(mut reader: impl Read) -> Result<MarketModel<T>, IoError> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| IoError::Json(serde_json::Error::io(e)))?;
    parse_market(&text)
}

/// JSON value of one number: a `"p/q"` string or a 17-digit JSON number.
pub fn number_value<T: Scalar>(x: &T) -> Value {
    let text = x.to_exact_string();
    if T::is_exact() {
        Value::String(text)
    } else {
        Number::from_str(&text)
            .map(Value::Number)
            .unwrap_or(Value::String(text))
    }
}

fn array<T: Scalar>(values: &[T]) -> Value {
    Value::Array(values.iter().map(number_value).collect())
}

pub fn market_value<T: Scalar>(m: &MarketModel<T>) -> Value {
    json!({ "atoms": array(m.atoms()), "mu": array(m.mu()), "nu": array(m.nu()) })
}

pub fn market_to_json<T: Scalar>(m: &MarketModel<T>) -> String {
    pretty(&market_value(m))
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

/// Kernel, monotonicity, adequacy, market price and the Dybvig bound.
pub fn inspect_value<T: Scalar>(m: &MarketModel<T>) -> Value {
    json!({
        "mode": T::MODE.name(),
        "atoms": array(m.atoms()),
        "kernel": array(m.kernel()),
        "kernel_monotone": m.is_kernel_monotone(),
        "adequate": m.is_adequate(),
        "market_price": number_value(&m.market_price()),
        "dybvig_bound": number_value(&dybvig_bound(m)),
    })
}

pub fn optimum_value<T: Scalar>(m: &MarketModel<T>, opt: &PriceOptimum<T>) -> Value {
    let profile = |p: &Option<PayoffProfile<T>>| p.as_ref().map_or(Value::Null, |p| array(p.values()));
    let maybe = |x: &Option<T>| x.as_ref().map_or(Value::Null, number_value);
    let mut report = Map::new();
    report.insert("mode".into(), T::MODE.name().into());
    report.insert("relation".into(), opt.relation.short_name().into());
    report.insert("status".into(), opt.status.name().into());
    report.insert("formulation".into(), opt.formulation.name().into());
    report.insert("price".into(), maybe(&opt.price));
    report.insert("theta".into(), profile(&opt.theta));
    report.insert("incumbent".into(), profile(&opt.incumbent));
    report.insert("root_bound".into(), maybe(&opt.root_bound));
    report.insert("iterations".into(), opt.iterations.into());
    report.insert("nodes".into(), opt.nodes.into());
    report.insert("atoms".into(), array(m.atoms()));
    report.insert("market_price".into(), number_value(&m.market_price()));
    report.insert("kernel_monotone".into(), m.is_kernel_monotone().into());
    report.insert("adequate".into(), m.is_adequate().into());
    report.insert("dybvig_bound".into(), number_value(&dybvig_bound(m)));
    Value::Object(report)
}

pub fn bound_chain_value<T: Scalar>(chain: &BoundChain<T>) -> Value {
    let [market, equal, first, second, bound] = chain.values();
    json!({
        "market": number_value(market),
        "eq": number_value(equal),
        "fsd": number_value(first),
        "ssd": number_value(second),
        "dybvig_bound": number_value(bound),
        "holds": chain.holds(),
    })
}

/// Reads a payoff vector back out of a report written by [`optimum_value`].
pub fn theta_from_report<T: Scalar>(text: &str) -> Result<Option<PayoffProfile<T>>, IoError> {
    #[derive(Deserialize)]
    struct Report {
        theta: Option<Vec<RawNumber>>,
    }
    let report: Report = serde_json::from_str(text)?;
    report
        .theta
        .map(|raw| Ok(PayoffProfile::new(numbers("theta", &raw)?)?))
        .transpose()
}

/// Two numeric columns from CSV; a non-numeric first row is a header and
/// lines starting with `#` are comments.
pub fn read_two_columns(reader: impl Read) -> Result<(Vec<f64>, Vec<f64>), IoError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (k, record) in csv.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(k + 1, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(IoError::Table {
                line,
                message: format!("expected 2 columns, found {}", record.len()),
            });
        }
        let parse = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
        match (parse(&record[0]), parse(&record[1])) {
            (Some(x), Some(y)) => {
                xs.push(x);
                ys.push(y);
            }
            _ if k == 0 => continue,
            _ => {
                return Err(IoError::Table {
                    line,
                    message: format!("not a number pair: {:?}", record.as_slice()),
                })
            }
        }
    }
    Ok((xs, ys))
}

pub fn read_density(reader: impl Read) -> Result<DensityTable<f64>, IoError> {
    let (xs, ys) = read_two_columns(reader)?;
    Ok(DensityTable::new(xs, ys)?)
}

pub fn read_kernel(reader: impl Read) -> Result<PiecewiseLinear<f64>, IoError> {
    let (xs, ys) = read_two_columns(reader)?;
    Ok(PiecewiseLinear::new(xs, ys)?)
}

fn tsv(writer: impl Write) -> csv::Writer<impl Write> {
    csv::WriterBuilder::new().delimiter(b'\t').from_writer(writer)
}

/// Columns `n, relation, min_price, market_price, sup_gap, status, lower_bound`.
pub fn write_gap_table(rows: &[ConvergenceRow], writer: impl Write) -> Result<(), IoError> {
    let mut out = tsv(writer);
    out.write_record([
        "n",
        "relation",
        "min_price",
        "market_price",
        "sup_gap",
        "status",
        "lower_bound",
    ])?;
    for r in rows {
        out.write_record([
            r.n.to_string(),
            r.relation.short_name().to_string(),
            r.min_price.to_exact_string(),
            r.market_price.to_exact_string(),
            r.sup_gap.to_exact_string(),
            r.status.name().to_string(),
            r.lower_bound.to_exact_string(),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Columns `atom, fsd, ssd, ompd` for the rows of one grid size.
pub fn write_minimizers(rows: &[&ConvergenceRow], writer: impl Write) -> Result<(), IoError> {
    let mut out = tsv(writer);
    let mut header = vec!["atom".to_string()];
    header.extend(rows.iter().map(|r| r.relation.short_name().to_string()));
    header.push("ompd".into());
    out.write_record(&header)?;
    if let Some(first) = rows.first() {
        for (i, x) in first.atoms.iter().enumerate() {
            let mut record = vec![x.to_exact_string()];
            record.extend(rows.iter().map(|r| r.minimizer[i].to_exact_string()));
            record.push(first.ompd[i].to_exact_string());
            out.write_record(&record)?;
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Two-column `x, value` TSV with a header row.
pub fn write_curve<T: Scalar>(header: [&str; 2], xs: &[T], ys: &[T], writer: impl Write) -> Result<(), IoError> {
    let mut out = tsv(writer);
    out.write_record(header)?;
    for (x, y) in xs.iter().zip(ys) {
        out.write_record([x.to_exact_string(), y.to_exact_string()])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}
