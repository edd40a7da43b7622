//! Independent oracles shared by the integration suites. Nothing here reuses
//! the sorting kernels of the library.

#![allow(dead_code)]

use icvar::mdp::{MdpSpec, Objective, Policy, PolicyEnumerator};
use icvar::risk::{
    cvar_lower_tail, cvar_upper_tail, tail_distribution, DiscreteDistribution, Tail,
};
use rand::Rng;

/// Lower-tail CVaR as `max_x { x - E[(x - X)^+] / alpha }` over the atoms.
pub fn sup_formula_lower(values: &[f64], probs: &[f64], alpha: f64) -> f64 {
    values
        .iter()
        .zip(probs)
        .filter(|(_, p)| **p > 0.0)
        .map(|(&x, _)| {
            let shortfall: f64 = values
                .iter()
                .zip(probs)
                .map(|(v, p)| p * (x - v).max(0.0))
                .sum();
            x - shortfall / alpha
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Upper-tail CVaR as `min_x { x + E[(X - x)^+] / alpha }`.
pub fn sup_formula_upper(values: &[f64], probs: &[f64], alpha: f64) -> f64 {
    let negated: Vec<f64> = values.iter().map(|v| -v).collect();
    -sup_formula_lower(&negated, probs, alpha)
}

/// Random distribution with `1..=max_len` atoms. About a third of the draws
/// use a coarse value grid so ties are common, and some atoms get zero mass.
pub fn random_distribution(rng: &mut impl Rng, max_len: usize) -> DiscreteDistribution {
    let len = rng.random_range(1..=max_len);
    let coarse = rng.random_bool(0.35);
    let values: Vec<f64> = (0..len)
        .map(|_| {
            if coarse {
                rng.random_range(0..4) as f64
            } else {
                rng.random_range(-5.0..5.0)
            }
        })
        .collect();
    let mut probs: Vec<f64> = (0..len)
        .map(|_| {
            if rng.random_bool(0.1) {
                0.0
            } else {
                rng.random::<f64>()
            }
        })
        .collect();
    if probs.iter().all(|p| *p == 0.0) {
        probs[0] = 1.0;
    }
    normalise(&mut probs);
    DiscreteDistribution::new(values, probs).unwrap()
}

pub fn normalise(probs: &mut [f64]) {
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    // push any rounding residue onto the largest atom
    let residue = 1.0 - probs.iter().sum::<f64>();
    let top = (0..probs.len())
        .max_by(|&a, &b| probs[a].total_cmp(&probs[b]))
        .unwrap();
    probs[top] += residue;
}

pub fn shifted(dist: &DiscreteDistribution, c: f64) -> DiscreteDistribution {
    DiscreteDistribution::new(
        dist.values().iter().map(|v| v + c).collect(),
        dist.probs().to_vec(),
    )
    .unwrap()
}

/// Every risk-measure property at one `alpha`; returns the names of the
/// properties that failed.
pub fn risk_property_failures(
    dist: &DiscreteDistribution,
    alpha: f64,
    other_alpha: f64,
    bump: &[f64],
) -> Vec<String> {
    let mut failed = Vec::new();
    let mut check = |ok: bool, name: &str| {
        if !ok {
            failed.push(name.to_string());
        }
    };
    let (values, probs) = (dist.values(), dist.probs());
    let lower = cvar_lower_tail(dist, alpha).unwrap();
    let upper = cvar_upper_tail(dist, alpha).unwrap();
    check(
        (lower - sup_formula_lower(values, probs, alpha)).abs() <= 1e-9,
        "sup formula (lower)",
    );
    check(
        (upper - sup_formula_upper(values, probs, alpha)).abs() <= 1e-9,
        "sup formula (upper)",
    );

    let (lo, hi) = if alpha <= other_alpha {
        (alpha, other_alpha)
    } else {
        (other_alpha, alpha)
    };
    check(
        cvar_lower_tail(dist, lo).unwrap() <= cvar_lower_tail(dist, hi).unwrap() + 1e-12,
        "lower tail nondecreasing in alpha",
    );
    check(
        cvar_upper_tail(dist, lo).unwrap() + 1e-12 >= cvar_upper_tail(dist, hi).unwrap(),
        "upper tail nonincreasing in alpha",
    );

    let support: Vec<f64> = values
        .iter()
        .zip(probs)
        .filter(|(_, p)| **p > 0.0)
        .map(|(v, _)| *v)
        .collect();
    let min = support.iter().copied().fold(f64::INFINITY, f64::min);
    let max = support.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = dist.mean();
    check(
        min - 1e-12 <= lower
            && lower <= mean + 1e-12
            && mean <= upper + 1e-12
            && upper <= max + 1e-12,
        "min <= lower <= mean <= upper <= max",
    );

    let c = 3.25;
    let moved = shifted(dist, c);
    check(
        (cvar_lower_tail(&moved, alpha).unwrap() - lower - c).abs() <= 1e-9,
        "translation (lower)",
    );
    check(
        (cvar_upper_tail(&moved, alpha).unwrap() - upper - c).abs() <= 1e-9,
        "translation (upper)",
    );

    for (tail, cvar) in [(Tail::Lower, lower), (Tail::Upper, upper)] {
        let t = tail_distribution(dist, alpha, tail).unwrap();
        let mass: f64 = t.mu.iter().sum();
        check((mass - alpha).abs() <= 1e-9, "tail mass sums to alpha");
        check(
            t.mu.iter()
                .zip(probs)
                .all(|(m, p)| *m >= 0.0 && *m <= p + 1e-12),
            "0 <= mu <= p",
        );
        check(
            (t.beta.iter().sum::<f64>() - 1.0).abs() <= 1e-9,
            "beta sums to 1",
        );
        check(
            (t.expectation(values) - cvar).abs() <= 1e-9,
            "beta . values = CVaR",
        );
    }

    // CVaR gap: CVaR(V + d) - CVaR(V) <= beta(V) . d for d >= 0
    let beta = tail_distribution(dist, alpha, Tail::Lower).unwrap().beta;
    let raised: Vec<f64> = values.iter().zip(bump).map(|(v, d)| v + d).collect();
    let raised = DiscreteDistribution::new(raised, probs.to_vec()).unwrap();
    let gap = cvar_lower_tail(&raised, alpha).unwrap() - lower;
    let bound: f64 = beta.iter().zip(bump).map(|(b, d)| b * d).sum();
    check(gap <= bound + 1e-9, "CVaR gap bound");
    check(gap >= -1e-12, "CVaR monotone under a pointwise increase");
    failed
}

/// Every positive-probability trajectory under `policy`, as `(states,
/// probability, total reward)`.
pub fn enumerate_paths(spec: &MdpSpec, policy: &Policy) -> Vec<(Vec<usize>, f64, f64)> {
    let mut out = Vec::new();
    let mut stack = vec![(vec![spec.initial_state()], 1.0, 0.0)];
    while let Some((states, p, total)) = stack.pop() {
        let h = states.len() - 1;
        let s = *states.last().unwrap();
        let a = policy.action(h, s);
        let total = total + spec.reward(s, a);
        if h + 1 == spec.horizon() {
            out.push((states, p, total));
            continue;
        }
        for s2 in 0..spec.num_states() {
            let q = spec.prob(s, a, s2);
            if q > 0.0 {
                let mut next = states.clone();
                next.push(s2);
                stack.push((next, p * q, total));
            }
        }
    }
    out
}

/// Expected total reward of `policy` from path enumeration.
pub fn expected_return(spec: &MdpSpec, policy: &Policy) -> f64 {
    enumerate_paths(spec, policy)
        .iter()
        .map(|(_, p, r)| p * r)
        .sum()
}

/// Best expected return over every deterministic Markovian policy.
pub fn best_expected_return(spec: &MdpSpec) -> f64 {
    let pick: fn(f64, f64) -> f64 = match spec.objective() {
        Objective::MaximizeReward => f64::max,
        Objective::MinimizeCost => f64::min,
    };
    PolicyEnumerator::for_spec(spec)
        .map(|p| expected_return(spec, &p))
        .reduce(pick)
        .unwrap()
}

/// Smallest positive visitation probability over all policies, steps and
/// states, from full policy enumeration and path sums.
pub fn min_visitation_by_paths(spec: &MdpSpec) -> f64 {
    let mut best = f64::INFINITY;
    for policy in PolicyEnumerator::for_spec(spec) {
        let mut w = vec![0.0; spec.horizon() * spec.num_states()];
        for (states, p, _) in enumerate_paths(spec, &policy) {
            for (h, s) in states.iter().enumerate() {
                w[h * spec.num_states() + s] += p;
            }
        }
        for x in w.into_iter().filter(|x| *x > 0.0) {
            best = best.min(x);
        }
    }
    best
}

/// Iterated CVaR value of `policy` from `(h, s)` by plain recursion, with each
/// one-step CVaR taken from the sup formula.
pub fn iterated_cvar_by_recursion(
    spec: &MdpSpec,
    policy: &Policy,
    alpha: f64,
    h: usize,
    s: usize,
) -> f64 {
    let a = policy.action(h, s);
    let r = spec.reward(s, a);
    if h + 1 == spec.horizon() {
        return r;
    }
    let next: Vec<f64> = (0..spec.num_states())
        .map(|s2| iterated_cvar_by_recursion(spec, policy, alpha, h + 1, s2))
        .collect();
    let probs = spec.transition_row(s, a);
    match spec.objective() {
        Objective::MaximizeReward => r + sup_formula_lower(&next, probs, alpha),
        Objective::MinimizeCost => r + sup_formula_upper(&next, probs, alpha),
    }
}
