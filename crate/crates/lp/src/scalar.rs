//! Number abstraction shared by the solver and the measure code.
//!
//! Two implementations exist: [`Rational`] (arbitrary precision, every
//! comparison exact) and `f64` (comparisons use the tolerances in [`tol`]).

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Exact rational number used in rational mode.
pub type Rational = BigRational;

/// Float-mode tolerances.
pub mod tol {
    /// General comparison of derived quantities.
    pub const COMPARE: f64 = 1e-9;
    /// Pivot and reduced-cost magnitude below which an entry counts as zero.
    pub const PIVOT: f64 = 1e-10;
    /// Optional tie detection between pricing kernel values.
    pub const KERNEL: f64 = 1e-12;
    /// Margin by which a minimum price must undercut the market price.
    pub const ARBITRAGE: f64 = 1e-8;
    /// Constraint satisfaction of a returned solution.
    pub const FEASIBILITY: f64 = 1e-7;
    /// Distance from {0, 1} below which a binary counts as integral.
    pub const INTEGRALITY: f64 = 1e-9;
}

/// Arithmetic mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Rational,
    Float,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Rational => "rational",
            Mode::Float => "float",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rational" | "exact" => Ok(Mode::Rational),
            "float" | "f64" => Ok(Mode::Float),
            other => Err(format!(
                "unknown arithmetic mode `{other}` (expected rational or float)"
            )),
        }
    }
}

/// An ordered field element: either an exact rational or an `f64`.
///
/// The `*_tol` comparisons are exact for rationals and ignore `eps`; for
/// floats they treat values within `eps * max(1, |a|, |b|)` as equal.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Sum
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
{
    const MODE: Mode;

    fn from_i64(n: i64) -> Self;

    /// `num / den`; panics when `den == 0`.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Exact conversion of a finite float (rationals keep every bit).
    fn from_f64(x: f64) -> Option<Self>;

    fn to_f64(&self) -> f64;

    fn is_finite(&self) -> bool;

    fn abs(&self) -> Self;

    /// `self -= a * b`, the simplex inner-loop update.
    fn sub_mul_assign(&mut self, a: &Self, b: &Self);

    /// Lossless text form: `p/q` for rationals, 17 significant digits for floats.
    fn to_exact_string(&self) -> String;

    /// Parse a number written as an integer, `p/q`, or a decimal like `0.85`.
    fn parse_exact(s: &str) -> Option<Self>;

    fn is_exact() -> bool {
        Self::MODE == Mode::Rational
    }

    fn cmp_tol(&self, other: &Self, eps: f64) -> Ordering;

    fn eq_tol(&self, other: &Self, eps: f64) -> bool {
        self.cmp_tol(other, eps) == Ordering::Equal
    }

    fn le_tol(&self, other: &Self, eps: f64) -> bool {
        self.cmp_tol(other, eps) != Ordering::Greater
    }

    fn lt_tol(&self, other: &Self, eps: f64) -> bool {
        self.cmp_tol(other, eps) == Ordering::Less
    }

    fn is_zero_tol(&self, eps: f64) -> bool {
        self.eq_tol(&Self::zero(), eps)
    }

    /// Total order for sorting; NaN never reaches here because inputs are validated finite.
    fn total_cmp(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for Rational {
    const MODE: Mode = Mode::Rational;

    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_finite(&self) -> bool {
        true
    }

    fn abs(&self) -> Self {
        num_traits::Signed::abs(self)
    }

    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self -= &(a * b);
    }

    fn to_exact_string(&self) -> String {
        self.to_string()
    }

    fn parse_exact(s: &str) -> Option<Self> {
        parse_rational(s)
    }

    fn cmp_tol(&self, other: &Self, _eps: f64) -> Ordering {
        self.cmp(other)
    }
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float;

    fn from_i64(n: i64) -> Self {
        n as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        num as f64 / den as f64
    }

    fn from_f64(x: f64) -> Option<Self> {
        x.is_finite().then_some(x)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }

    fn to_exact_string(&self) -> String {
        format_f64_17(*self)
    }

    fn parse_exact(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p: f64 = p.trim().parse().ok()?;
            let q: f64 = q.trim().parse().ok()?;
            return (q != 0.0).then(|| p / q).filter(|v| v.is_finite());
        }
        s.parse::<f64>().ok().filter(|v| v.is_finite())
    }

    fn cmp_tol(&self, other: &Self, eps: f64) -> Ordering {
        let scale = 1f64.max(f64::abs(*self)).max(f64::abs(*other));
        let diff = self - other;
        if f64::abs(diff) <= eps * scale {
            Ordering::Equal
        } else if diff < 0.0 {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }
}

/// Parse `p`, `p/q` or a plain decimal (`-1.25`, `1e-3`) into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).ok()?;
        let q = BigInt::from_str(q.trim()).ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Ok(n) = BigInt::from_str(s) {
        return Some(BigRational::from_integer(n));
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str(if all_digits.is_empty() { "0" } else { &all_digits }).ok()?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

/// Format with 17 significant digits, plain notation for moderate exponents,
/// trailing zeros trimmed. Round-trips every finite `f64`.
pub fn format_f64_17(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let body = if (-6..=20).contains(&exp) {
        if exp >= 0 {
            let point = exp as usize + 1;
            let (int_part, frac_part) = if point >= digits.len() {
                (format!("{digits}{}", "0".repeat(point - digits.len())), String::new())
            } else {
                (digits[..point].to_string(), digits[point..].to_string())
            };
            join_trimmed(&int_part, &frac_part)
        } else {
            let frac = format!("{}{digits}", "0".repeat((-exp - 1) as usize));
            join_trimmed("0", &frac)
        }
    } else {
        let frac = digits[1..].trim_end_matches('0');
        if frac.is_empty() {
            format!("{}e{exp}", &digits[..1])
        } else {
            format!("{}.{frac}e{exp}", &digits[..1])
        }
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

fn join_trimmed(int_part: &str, frac_part: &str) -> String {
    let frac = frac_part.trim_end_matches('0');
    if frac.is_empty() {
        int_part.to_string()
    } else {
        format!("{int_part}.{frac}")
    }
}
