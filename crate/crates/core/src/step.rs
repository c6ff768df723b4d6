//! Piecewise-constant functions on the real line.

use std::cmp::Ordering;

use sdarb_lp::Scalar;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StepError {
    #[error("expected {expected} values for {breakpoints} breakpoints, got {got}")]
    ValueCount {
        breakpoints: usize,
        expected: usize,
        got: usize,
    },
    #[error("breakpoints must be strictly increasing (index {0})")]
    NonIncreasingBreakpoints(usize),
}

/// Which piece owns a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Continuity {
    /// Pieces are `[b_k, b_{k+1})`, as for a distribution function.
    Right,
    /// Pieces are `(b_k, b_{k+1}]`, as for a quantile function.
    Left,
}

/// A step function with `breakpoints.len() + 1` pieces; `values[k]` holds on
/// the piece that starts after `k` breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction<T> {
    breakpoints: Vec<T>,
    values: Vec<T>,
    continuity: Continuity,
}

impl<T: Scalar> StepFunction<T> {
    pub fn new(breakpoints: Vec<T>, values: Vec<T>, continuity: Continuity) -> Result<Self, StepError> {
        if values.len() != breakpoints.len() + 1 {
            return Err(StepError::ValueCount {
                breakpoints: breakpoints.len(),
                expected: breakpoints.len() + 1,
                got: values.len(),
            });
        }
        if let Some(k) = breakpoints.windows(2).position(|w| w[0] >= w[1]) {
            return Err(StepError::NonIncreasingBreakpoints(k + 1));
        }
        Ok(Self {
            breakpoints,
            values,
            continuity,
        })
    }

    pub fn constant(value: T) -> Self {
        Self {
            breakpoints: Vec::new(),
            values: vec![value],
            continuity: Continuity::Right,
        }
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn continuity(&self) -> Continuity {
        self.continuity
    }

    /// Index of the piece containing `x`.
    pub fn piece(&self, x: &T) -> usize {
        match self.continuity {
            Continuity::Right => self.breakpoints.partition_point(|b| b <= x),
            Continuity::Left => self.breakpoints.partition_point(|b| b < x),
        }
    }

    pub fn eval(&self, x: &T) -> T {
        self.values[self.piece(x)].clone()
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] >= w[1])
    }

    /// Exact `∫_a^b f` for `a <= b`; endpoints between breakpoints are fine.
    pub fn integral(&self, a: &T, b: &T) -> T {
        if b <= a {
            return T::zero();
        }
        let mut total = T::zero();
        let mut left = a.clone();
        let first = self.breakpoints.partition_point(|x| x <= a);
        for k in first..=self.breakpoints.len() {
            let right = match self.breakpoints.get(k) {
                Some(bp) if bp < b => bp.clone(),
                _ => b.clone(),
            };
            total += &(self.values[k].clone() * (right.clone() - &left));
            if right == *b {
                break;
            }
            left = right;
        }
        total
    }

    /// The function `u ↦ f(1 - u)`.
    pub fn reflect_unit(&self) -> Self {
        let breakpoints: Vec<T> = self.breakpoints.iter().rev().map(|b| T::one() - b).collect();
        let values: Vec<T> = self.values.iter().rev().cloned().collect();
        let continuity = match self.continuity {
            Continuity::Right => Continuity::Left,
            Continuity::Left => Continuity::Right,
        };
        Self {
            breakpoints,
            values,
            continuity,
        }
    }

    /// Merged, sorted breakpoints of several step functions restricted to `(lo, hi)`,
    /// framed by `lo` and `hi`.
    pub fn refinement(functions: &[&Self], lo: &T, hi: &T) -> Vec<T> {
        let mut points: Vec<T> = functions
            .iter()
            .flat_map(|f| f.breakpoints.iter().cloned())
            .filter(|b| b > lo && b < hi)
            .collect();
        points.push(lo.clone());
        points.push(hi.clone());
        points.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
        points.dedup();
        points
    }
}
