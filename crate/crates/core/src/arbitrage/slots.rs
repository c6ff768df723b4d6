//! Second-order (and concave) minimization in closed form.
//!
//! Replacing the payoffs of two atoms by their `μ`-weighted mean is a mean
//! preserving contraction, so it keeps both relations; when the atom with the
//! larger kernel value pays more, it also lowers the price. Hence an optimal
//! payoff is nondecreasing along atoms sorted by kernel value descending and
//! constant where kernel values tie. For such payoffs the shortfall
//! constraints reduce to one bound per prefix of that order,
//! `Σ_{p<=q} μ_p θ_p >= max_t (t W_q - E(t - X)_+) = ∫_0^{W_q} Q(u) du`
//! with `W_q` the prefix mass. The objective has positive weight on every
//! prefix sum and the bound is convex in `W`, so each bound is attained: each
//! group of tied atoms pays the average of `Q` over its probability slot.
//! The price equals `∫_0^1 Q(u) Q_π(1-u) du`.

use sdarb_lp::Scalar;

use crate::measures::{MarketModel, MeasureError, PayoffProfile};

pub fn solve<T: Scalar>(m: &MarketModel<T>) -> Result<(PayoffProfile<T>, T), MeasureError> {
    let n = m.len();
    let kernel = m.kernel();
    let mu = m.mu();
    let q = m.objective_measure().quantile()?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| kernel[b].total_cmp(&kernel[a]).then(a.cmp(&b)));
    let mut theta = vec![T::zero(); n];
    let mut start = T::zero();
    let mut k = 0;
    while k < n {
        let mut end = k + 1;
        while end < n && kernel[order[end]] == kernel[order[k]] {
            end += 1;
        }
        let mass: T = order[k..end].iter().map(|&i| mu[i].clone()).sum();
        let stop = if end == n { T::one() } else { start.clone() + &mass };
        let average = q.integral(&start, &stop) / &(stop.clone() - &start);
        for &i in &order[k..end] {
            theta[i] = average.clone();
        }
        start = stop;
        k = end;
    }
    let price = m.price_values(&theta)?;
    Ok((PayoffProfile::new(theta)?, price))
}
