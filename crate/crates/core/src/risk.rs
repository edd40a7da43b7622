//! Risk measures over finite, value-weighted distributions.
//!
//! The lower tail is the risk-averse side when values are rewards: `CVaR^α`
//! averages the worst `α` fraction of probability mass. The upper tail is the
//! mirror image used for cost-minimising models.
//!
//! Atoms with equal values are ordered by their original index, so the tail
//! weights returned by [`tail_distribution`] are reproducible even though the
//! CVaR value itself does not depend on how ties are split.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Absolute tolerance for probability-vector normalisation checks.
pub const PROB_TOLERANCE: f64 = 1e-12;

/// A random variable with finitely many atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        if values.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} values but {} probabilities",
                values.len(),
                probs.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidDistribution(format!("non-finite value {v}")));
        }
        if let Some(p) = probs
            .iter()
            .find(|p| !(p.is_finite() && **p >= 0.0 && **p <= 1.0))
        {
            return Err(Error::InvalidDistribution(format!(
                "probability {p} outside [0, 1]"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { values, probs })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.probs)
            .map(|(v, p)| v * p)
            .sum()
    }
}

/// Which side of the distribution is treated as the risky tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// Smallest values (rewards).
    Lower,
    /// Largest values (costs).
    Upper,
}

/// Tail-conditional reweighting of a distribution at risk level `alpha`.
///
/// `mu[i]` is the part of atom `i`'s mass that falls inside the tail and
/// `beta = mu / alpha` is the conditional distribution given the tail event.
#[derive(Debug, Clone, PartialEq)]
pub struct TailDistribution {
    pub alpha: f64,
    pub mu: Vec<f64>,
    pub beta: Vec<f64>,
}

impl TailDistribution {
    /// Expectation of `values` under the conditional tail weights.
    pub fn expectation(&self, values: &[f64]) -> f64 {
        self.beta.iter().zip(values).map(|(b, v)| b * v).sum()
    }
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

/// The `alpha`-quantile `min{x : F(x) >= alpha}`.
pub fn var(dist: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let mut order = Vec::new();
    ascending_order(&dist.values, &mut order);
    let mut acc = 0.0;
    let mut last_positive = None;
    let mut i = 0;
    while i < order.len() {
        let x = dist.values[order[i]];
        // merge every atom sharing this value before testing the CDF
        while i < order.len() && dist.values[order[i]] == x {
            let p = dist.probs[order[i]];
            if p > 0.0 {
                acc += p;
                last_positive = Some(x);
            }
            i += 1;
        }
        if acc > 0.0 && acc + PROB_TOLERANCE >= alpha {
            return Ok(x);
        }
    }
    last_positive.ok_or(Error::EmptyDistribution)
}

/// CVaR of the worst (smallest) `alpha` fraction of mass.
pub fn cvar_lower_tail(dist: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let mut order = Vec::new();
    ascending_order(&dist.values, &mut order);
    Ok(cvar_in_order(
        &order,
        &dist.values,
        |i| dist.probs[i],
        alpha,
    ))
}

/// CVaR of the largest `alpha` fraction of mass.
pub fn cvar_upper_tail(dist: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let mut order = Vec::new();
    descending_order(&dist.values, &mut order);
    Ok(cvar_in_order(
        &order,
        &dist.values,
        |i| dist.probs[i],
        alpha,
    ))
}

pub fn tail_distribution(
    dist: &DiscreteDistribution,
    alpha: f64,
    tail: Tail,
) -> Result<TailDistribution> {
    check_alpha(alpha)?;
    let mut order = Vec::new();
    match tail {
        Tail::Lower => ascending_order(&dist.values, &mut order),
        Tail::Upper => descending_order(&dist.values, &mut order),
    }
    let mut mu = vec![0.0; dist.len()];
    tail_mass_in_order(&order, |i| dist.probs[i], alpha, &mut mu);
    let beta = mu.iter().map(|m| m / alpha).collect();
    Ok(TailDistribution { alpha, mu, beta })
}

/// Fills `order` with indices sorted by `(value, index)` ascending.
pub(crate) fn ascending_order(values: &[f64], order: &mut Vec<usize>) {
    sort_indices(values, order, |x, y| x.total_cmp(&y));
}

/// Fills `order` with indices sorted by `(-value, index)` ascending, i.e. the
/// ascending order of the negated values.
pub(crate) fn descending_order(values: &[f64], order: &mut Vec<usize>) {
    sort_indices(values, order, |x, y| y.total_cmp(&x));
}

/// Stable sort of `0..n` by `cmp` on the values, so ties keep index order.
#[inline]
fn sort_indices(values: &[f64], order: &mut Vec<usize>, cmp: impl Fn(f64, f64) -> Ordering) {
    order.clear();
    order.extend(0..values.len());
    if values.len() > 16 {
        order.sort_by(|&a, &b| cmp(values[a], values[b]));
        return;
    }
    // insertion sort; the rows learners see are short
    for i in 1..order.len() {
        let item = order[i];
        let mut j = i;
        while j > 0 && cmp(values[item], values[order[j - 1]]) == Ordering::Less {
            order[j] = order[j - 1];
            j -= 1;
        }
        order[j] = item;
    }
}

/// CVaR kernel: walks atoms in `order`, giving each its full mass until the
/// boundary atom takes the remaining share of `alpha`.
///
/// `alpha` must already be validated. Zero-mass atoms are skipped.
#[inline]
pub(crate) fn cvar_in_order(
    order: &[usize],
    values: &[f64],
    prob: impl Fn(usize) -> f64,
    alpha: f64,
) -> f64 {
    let mut remaining = alpha;
    let mut total = 0.0;
    for &i in order {
        let p = prob(i);
        if p <= 0.0 {
            continue;
        }
        if p >= remaining {
            total += (remaining / alpha) * values[i];
            return total;
        }
        total += (p / alpha) * values[i];
        remaining -= p;
    }
    total
}

/// Writes the tail mass `mu` of every atom; atoms outside the tail get 0.
#[inline]
pub(crate) fn tail_mass_in_order(
    order: &[usize],
    prob: impl Fn(usize) -> f64,
    alpha: f64,
    mu: &mut [f64],
) {
    mu.iter_mut().for_each(|m| *m = 0.0);
    let mut remaining = alpha;
    for &i in order {
        let p = prob(i);
        if p <= 0.0 {
            continue;
        }
        if p >= remaining {
            mu[i] = remaining;
            return;
        }
        mu[i] = p;
        remaining -= p;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(values: &[f64], probs: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(values.to_vec(), probs.to_vec()).unwrap()
    }

    /// `sup_x { x - E[(x - X)^+] / alpha }`, evaluated at every atom.
    fn sup_formula(d: &DiscreteDistribution, alpha: f64) -> f64 {
        d.values()
            .iter()
            .map(|&x| {
                let shortfall: f64 = d
                    .values()
                    .iter()
                    .zip(d.probs())
                    .map(|(v, p)| p * (x - v).max(0.0))
                    .sum();
                x - shortfall / alpha
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn var_point_mass() {
        let d = dist(&[0.7], &[1.0]);
        for alpha in [0.01, 0.5, 1.0] {
            assert_eq!(var(&d, alpha).unwrap(), 0.7);
        }
    }

    #[test]
    fn var_thresholds() {
        let d = dist(&[0.2, 0.8, 1.0], &[0.2, 0.3, 0.5]);
        assert_eq!(var(&d, 0.2).unwrap(), 0.2);
        assert_eq!(var(&d, 0.25).unwrap(), 0.8);
        assert_eq!(var(&d, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn var_merges_tied_values() {
        let d = dist(&[0.5, 0.1, 0.5], &[0.2, 0.3, 0.5]);
        assert_eq!(var(&d, 0.31).unwrap(), 0.5);
        assert_eq!(var(&d, 0.3).unwrap(), 0.1);
    }

    #[test]
    fn alpha_out_of_range() {
        let d = dist(&[1.0], &[1.0]);
        assert!(matches!(
            cvar_lower_tail(&d, 0.0),
            Err(Error::AlphaOutOfRange(_))
        ));
        assert!(matches!(
            cvar_upper_tail(&d, 1.5),
            Err(Error::AlphaOutOfRange(_))
        ));
        assert!(matches!(var(&d, -0.1), Err(Error::AlphaOutOfRange(_))));
        assert!(matches!(
            tail_distribution(&d, f64::NAN, Tail::Lower),
            Err(Error::AlphaOutOfRange(_))
        ));
    }

    #[test]
    fn rejects_bad_distributions() {
        assert!(matches!(
            DiscreteDistribution::new(vec![], vec![]),
            Err(Error::EmptyDistribution)
        ));
        assert!(DiscreteDistribution::new(vec![1.0, 2.0], vec![0.5]).is_err());
        assert!(DiscreteDistribution::new(vec![1.0, 2.0], vec![0.5, 0.6]).is_err());
        assert!(DiscreteDistribution::new(vec![1.0, 2.0], vec![-0.1, 1.1]).is_err());
    }

    #[test]
    fn cvar_full_mass_is_mean() {
        let d = dist(&[0.2, 0.8], &[0.5, 0.5]);
        assert!((cvar_lower_tail(&d, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((cvar_upper_tail(&d, 1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cvar_bandit_state_value() {
        // ((alpha - eta) * 0.2 (H - n) + eta * 0.8 (H - n)) / alpha with H - n = 8, eta = 0.05
        let d = dist(&[6.4, 1.6], &[0.95, 0.05]);
        assert!((cvar_lower_tail(&d, 0.1).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn cvar_upper_tail_cost_examples() {
        let d = dist(&[1.0, 0.4], &[0.0025, 0.9975]);
        assert!((cvar_upper_tail(&d, 0.05).unwrap() - 0.43).abs() < 1e-12);
        let d = dist(&[1.0, 0.5], &[0.0001, 0.9999]);
        assert!((cvar_upper_tail(&d, 0.05).unwrap() - 0.501).abs() < 1e-12);
    }

    #[test]
    fn cvar_matches_sup_formula_on_fixed_case() {
        let d = dist(&[0.9, 0.1, 0.4, 0.65], &[0.1, 0.2, 0.3, 0.4]);
        let got = cvar_lower_tail(&d, 0.37).unwrap();
        // frozen from the sup-formula oracle: (0.2 * 0.1 + 0.17 * 0.4) / 0.37
        let frozen = 0.088 / 0.37;
        assert!((sup_formula(&d, 0.37) - frozen).abs() < 1e-12);
        assert!((got - frozen).abs() < 1e-12);
    }

    #[test]
    fn tail_inside_first_atom() {
        let d = dist(&[0.2, 0.8], &[0.5, 0.5]);
        let t = tail_distribution(&d, 0.25, Tail::Lower).unwrap();
        assert_eq!(t.mu, vec![0.25, 0.0]);
        assert_eq!(t.beta, vec![1.0, 0.0]);
    }

    #[test]
    fn tail_boundary_split() {
        let d = dist(&[0.0, 1.0], &[0.1, 0.9]);
        let t = tail_distribution(&d, 0.5, Tail::Lower).unwrap();
        assert!((t.mu[0] - 0.1).abs() < 1e-15 && (t.mu[1] - 0.4).abs() < 1e-15);
        assert!((t.beta[0] - 0.2).abs() < 1e-15 && (t.beta[1] - 0.8).abs() < 1e-15);
        assert!((t.expectation(d.values()) - 0.8).abs() < 1e-15);
        assert!((cvar_lower_tail(&d, 0.5).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn ties_resolved_by_index() {
        let d = dist(&[0.3, 0.3, 0.9], &[0.25, 0.25, 0.5]);
        let t = tail_distribution(&d, 0.3, Tail::Lower).unwrap();
        assert_eq!(t.mu[0], 0.25);
        assert!((t.mu[1] - 0.05).abs() < 1e-15);
        assert_eq!(t.mu[2], 0.0);
        let up = tail_distribution(
            &dist(&[0.9, 0.3, 0.9], &[0.25, 0.25, 0.5]),
            0.3,
            Tail::Upper,
        )
        .unwrap();
        assert_eq!(up.mu[0], 0.25);
        assert!((up.mu[2] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn zero_mass_atoms_are_kept_with_zero_weight() {
        let d = dist(&[-5.0, 1.0, 2.0], &[0.0, 0.5, 0.5]);
        let t = tail_distribution(&d, 0.1, Tail::Lower).unwrap();
        assert_eq!(t.beta.len(), 3);
        assert_eq!(t.beta[0], 0.0);
        assert_eq!(cvar_lower_tail(&d, 0.1).unwrap(), 1.0);
    }
}
