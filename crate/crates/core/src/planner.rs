//! Exact dynamic programming on known MDPs.
//!
//! Three backups share one backward-induction driver: the Iterated CVaR
//! backup (CVaR of the next-step value under `p(.|s,a)`), the Worst Path
//! backup (extreme value over the transition support), and the plain
//! expectation. Under [`Objective::MinimizeCost`] the risky tail is the upper
//! one and actions are chosen by `min` instead of `max`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mdp::{next_assignment, MdpSpec, Objective, Policy};
use crate::risk::{ascending_order, check_alpha, cvar_in_order, descending_order};

/// Per-step value tables. `v` has `H + 1` rows, the last one identically 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTables {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    v: Vec<f64>,
    q: Vec<f64>,
}

impl ValueTables {
    pub fn zeros(horizon: usize, num_states: usize, num_actions: usize) -> Self {
        Self {
            horizon,
            num_states,
            num_actions,
            v: vec![0.0; (horizon + 1) * num_states],
            q: vec![0.0; horizon * num_states * num_actions],
        }
    }

    pub fn for_spec(spec: &MdpSpec) -> Self {
        Self::zeros(spec.horizon(), spec.num_states(), spec.num_actions())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn v(&self, h: usize, s: usize) -> f64 {
        self.v[h * self.num_states + s]
    }

    #[inline]
    pub fn q(&self, h: usize, s: usize, a: usize) -> f64 {
        self.q[(h * self.num_states + s) * self.num_actions + a]
    }

    #[inline]
    pub fn set_v(&mut self, h: usize, s: usize, value: f64) {
        self.v[h * self.num_states + s] = value;
    }

    #[inline]
    pub fn set_q(&mut self, h: usize, s: usize, a: usize, value: f64) {
        self.q[(h * self.num_states + s) * self.num_actions + a] = value;
    }

    /// Row `h` of `v`, for `h` in `0..=H`.
    #[inline]
    pub fn v_step(&self, h: usize) -> &[f64] {
        &self.v[h * self.num_states..(h + 1) * self.num_states]
    }

    /// `(q_h, v_h, v_{h+1})` as disjoint slices.
    #[inline]
    pub(crate) fn step_mut(&mut self, h: usize) -> (&mut [f64], &mut [f64], &[f64]) {
        let ns = self.num_states;
        let q = &mut self.q[h * ns * self.num_actions..(h + 1) * ns * self.num_actions];
        let (current, next) = self.v[h * ns..(h + 2) * ns].split_at_mut(ns);
        (q, current, next)
    }

    #[inline]
    pub fn q_row(&self, h: usize, s: usize) -> &[f64] {
        let start = (h * self.num_states + s) * self.num_actions;
        &self.q[start..start + self.num_actions]
    }

    pub fn v_rows(&self) -> Vec<Vec<f64>> {
        self.v
            .chunks(self.num_states)
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn q_rows(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.horizon)
            .map(|h| {
                (0..self.num_states)
                    .map(|s| self.q_row(h, s).to_vec())
                    .collect()
            })
            .collect()
    }

    /// Largest absolute difference over every `v` and `q` entry.
    pub fn max_abs_diff(&self, other: &ValueTables) -> f64 {
        assert_eq!(self.v.len(), other.v.len(), "tables of different shape");
        assert_eq!(self.q.len(), other.q.len(), "tables of different shape");
        self.v
            .iter()
            .zip(&other.v)
            .chain(self.q.iter().zip(&other.q))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest absolute difference over the `v` entries only.
    pub fn max_abs_v_diff(&self, other: &ValueTables) -> f64 {
        assert_eq!(self.v.len(), other.v.len(), "tables of different shape");
        self.v
            .iter()
            .zip(&other.v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Optimal tables with the greedy policy (lowest action index on ties).
#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub tables: ValueTables,
    pub policy: Policy,
}

#[derive(Serialize)]
struct PlanDocument {
    v: Vec<Vec<f64>>,
    q: Vec<Vec<Vec<f64>>>,
    policy: Vec<Vec<usize>>,
}

impl PlanResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&PlanDocument {
            v: self.tables.v_rows(),
            q: self.tables.q_rows(),
            policy: self.policy.rows(),
        })?)
    }
}

/// Which per-step risk functional the Bellman backup applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    IteratedCvar { alpha: f64 },
    WorstPath,
    RiskNeutral,
}

impl Criterion {
    pub fn validate(self) -> Result<()> {
        match self {
            Criterion::IteratedCvar { alpha } => check_alpha(alpha),
            _ => Ok(()),
        }
    }
}

/// Is `candidate` strictly better than `incumbent` under `objective`?
#[inline]
pub(crate) fn improves(objective: Objective, candidate: f64, incumbent: f64) -> bool {
    match objective {
        Objective::MaximizeReward => candidate > incumbent,
        Objective::MinimizeCost => candidate < incumbent,
    }
}

/// Index of the best entry, lowest index on ties.
#[inline]
pub(crate) fn greedy(objective: Objective, row: &[f64]) -> usize {
    let mut best = 0;
    for (a, &value) in row.iter().enumerate().skip(1) {
        if improves(objective, value, row[best]) {
            best = a;
        }
    }
    best
}

/// Risk ordering of successor values: worst first.
pub(crate) fn risk_order(objective: Objective, values: &[f64], order: &mut Vec<usize>) {
    match objective {
        Objective::MaximizeReward => ascending_order(values, order),
        Objective::MinimizeCost => descending_order(values, order),
    }
}

#[inline]
fn backup(
    spec: &MdpSpec,
    criterion: Criterion,
    s: usize,
    a: usize,
    next: &[f64],
    order: &[usize],
) -> f64 {
    match criterion {
        Criterion::IteratedCvar { alpha } => {
            cvar_in_order(order, next, |i| spec.prob(s, a, i), alpha)
        }
        Criterion::RiskNeutral => spec
            .support(s, a)
            .iter()
            .map(|&i| spec.prob(s, a, i) * next[i])
            .sum(),
        Criterion::WorstPath => {
            let values = spec.support(s, a).iter().map(|&i| next[i]);
            match spec.objective() {
                Objective::MaximizeReward => values.fold(f64::INFINITY, f64::min),
                Objective::MinimizeCost => values.fold(f64::NEG_INFINITY, f64::max),
            }
        }
    }
}

/// Backward induction. With `policy = None` the greedy action is taken.
fn backward_induction(spec: &MdpSpec, criterion: Criterion, policy: Option<&Policy>) -> PlanResult {
    let (ns, na, horizon) = (spec.num_states(), spec.num_actions(), spec.horizon());
    let objective = spec.objective();
    let mut tables = ValueTables::for_spec(spec);
    let mut chosen = Policy::constant(horizon, ns, 0);
    let mut order = Vec::with_capacity(ns);
    let mut next = vec![0.0; ns];
    for h in (0..horizon).rev() {
        next.copy_from_slice(tables.v_step(h + 1));
        risk_order(objective, &next, &mut order);
        for s in 0..ns {
            for a in 0..na {
                let value = spec.reward(s, a) + backup(spec, criterion, s, a, &next, &order);
                tables.set_q(h, s, a, value);
            }
            let a = match policy {
                Some(p) => p.action(h, s),
                None => greedy(objective, tables.q_row(h, s)),
            };
            chosen.set_action(h, s, a);
            tables.set_v(h, s, tables.q(h, s, a));
        }
    }
    PlanResult {
        tables,
        policy: chosen,
    }
}

pub fn plan(spec: &MdpSpec, criterion: Criterion) -> Result<PlanResult> {
    criterion.validate()?;
    Ok(backward_induction(spec, criterion, None))
}

pub fn evaluate_policy(
    spec: &MdpSpec,
    policy: &Policy,
    criterion: Criterion,
) -> Result<ValueTables> {
    criterion.validate()?;
    policy.check_against(spec)?;
    Ok(backward_induction(spec, criterion, Some(policy)).tables)
}

/// Optimal Iterated CVaR tables at risk level `alpha`.
pub fn plan_iterated_cvar(spec: &MdpSpec, alpha: f64) -> Result<PlanResult> {
    plan(spec, Criterion::IteratedCvar { alpha })
}

/// Iterated CVaR value of a fixed policy; `q` holds `Q^π` for every action.
pub fn evaluate_policy_iterated_cvar(
    spec: &MdpSpec,
    policy: &Policy,
    alpha: f64,
) -> Result<ValueTables> {
    evaluate_policy(spec, policy, Criterion::IteratedCvar { alpha })
}

/// Optimal Worst Path tables: the backup takes the extreme over `supp(p(.|s,a))`.
pub fn plan_worst_path(spec: &MdpSpec) -> PlanResult {
    backward_induction(spec, Criterion::WorstPath, None)
}

pub fn evaluate_policy_worst_path(spec: &MdpSpec, policy: &Policy) -> Result<ValueTables> {
    evaluate_policy(spec, policy, Criterion::WorstPath)
}

pub fn plan_risk_neutral(spec: &MdpSpec) -> PlanResult {
    backward_induction(spec, Criterion::RiskNeutral, None)
}

pub fn evaluate_policy_risk_neutral(spec: &MdpSpec, policy: &Policy) -> Result<ValueTables> {
    evaluate_policy(spec, policy, Criterion::RiskNeutral)
}

/// Optimal Iterated CVaR tables by exhaustive policy enumeration.
///
/// Every deterministic Markovian policy is valued without any `max` inside
/// the recursion: `Q^π_h` only depends on the policy's tail `π_{h+1..H}`, so
/// each tail is evaluated once and every choice of `π_h` is assembled from it.
/// The tables hold per-`(h, s)` optima over all policies, and the returned
/// policy is the first in lexicographic order attaining all of them.
pub fn brute_force_plan(spec: &MdpSpec, alpha: f64, cap: u128) -> Result<PlanResult> {
    check_alpha(alpha)?;
    let count = spec.policy_count();
    if count > cap {
        return Err(Error::EnumerationTooLarge { count, cap });
    }
    let (ns, na, horizon) = (spec.num_states(), spec.num_actions(), spec.horizon());
    let objective = spec.objective();
    let criterion = Criterion::IteratedCvar { alpha };
    let worst = match objective {
        Objective::MaximizeReward => f64::NEG_INFINITY,
        Objective::MinimizeCost => f64::INFINITY,
    };
    let pick = |a: f64, b: f64| if improves(objective, a, b) { a } else { b };

    let mut tables = ValueTables::for_spec(spec);
    // levels[h][tail * S + s] = V^π_h(s) for every tail policy over steps h..H-1
    let mut levels: Vec<Vec<f64>> = vec![Vec::new(); horizon + 1];
    levels[horizon] = vec![0.0; ns];
    let per_step = na.pow(ns as u32);
    let mut order = Vec::with_capacity(ns);
    let mut q_tail = vec![0.0; ns * na];
    for h in (0..horizon).rev() {
        let tails = levels[h + 1].len() / ns;
        let mut current = vec![0.0; tails * per_step * ns];
        for s in 0..ns {
            tables.set_v(h, s, worst);
            for a in 0..na {
                tables.set_q(h, s, a, worst);
            }
        }
        for tail in 0..tails {
            let next = &levels[h + 1][tail * ns..(tail + 1) * ns];
            risk_order(objective, next, &mut order);
            for s in 0..ns {
                for a in 0..na {
                    let value = spec.reward(s, a) + backup(spec, criterion, s, a, next, &order);
                    q_tail[s * na + a] = value;
                    tables.set_q(h, s, a, pick(value, tables.q(h, s, a)));
                }
            }
            let mut choice = vec![0usize; ns];
            let mut index = 0;
            loop {
                let slot = (index * tails + tail) * ns;
                for s in 0..ns {
                    let value = q_tail[s * na + choice[s]];
                    current[slot + s] = value;
                    tables.set_v(h, s, pick(value, tables.v(h, s)));
                }
                index += 1;
                if !next_assignment(&mut choice, na) {
                    break;
                }
            }
        }
        levels[h] = current;
    }

    let total = levels[0].len() / ns;
    let attains = |idx: usize| {
        (0..horizon).all(|h| {
            let tails = levels[h].len() / ns;
            let tail = idx % tails;
            (0..ns).all(|s| (levels[h][tail * ns + s] - tables.v(h, s)).abs() <= 1e-12)
        })
    };
    let s1 = spec.initial_state();
    let best = (0..total).find(|&idx| attains(idx)).unwrap_or_else(|| {
        (0..total)
            .reduce(|b, i| {
                if improves(objective, levels[0][i * ns + s1], levels[0][b * ns + s1]) {
                    i
                } else {
                    b
                }
            })
            .unwrap_or(0)
    });
    Ok(PlanResult {
        tables,
        policy: decode_policy(best, horizon, ns, na),
    })
}

/// Inverse of the lexicographic policy numbering (last cell fastest).
fn decode_policy(mut index: usize, horizon: usize, ns: usize, na: usize) -> Policy {
    let mut table = vec![0; horizon * ns];
    for cell in table.iter_mut().rev() {
        *cell = index % na;
        index /= na;
    }
    Policy::from_flat(horizon, ns, table)
}

/// CVaR of the total episode reward (upper tail of total cost in cost mode)
/// for a fixed Markovian policy, by enumerating every positive-probability
/// trajectory. Fails when more than `cap` trajectories would be produced.
pub fn evaluate_total_cvar_fixed_policy(
    spec: &MdpSpec,
    policy: &Policy,
    alpha: f64,
    cap: u128,
) -> Result<f64> {
    check_alpha(alpha)?;
    policy.check_against(spec)?;
    let mut totals = Vec::new();
    let mut probs = Vec::new();
    let mut stack = vec![(0usize, spec.initial_state(), 0.0f64, 1.0f64)];
    while let Some((h, s, acc, p)) = stack.pop() {
        let a = policy.action(h, s);
        let total = acc + spec.reward(s, a);
        if h + 1 == spec.horizon() {
            totals.push(total);
            probs.push(p);
            if totals.len() as u128 > cap {
                return Err(Error::EnumerationTooLarge {
                    count: totals.len() as u128,
                    cap,
                });
            }
            continue;
        }
        for &next in spec.support(s, a).iter().rev() {
            stack.push((h + 1, next, total, p * spec.prob(s, a, next)));
        }
    }
    let mut order = Vec::new();
    risk_order(spec.objective(), &totals, &mut order);
    Ok(cvar_in_order(&order, &totals, |i| probs[i], alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{random_mdp, treatment_tree};

    fn chain(horizon: usize) -> MdpSpec {
        let t = vec![
            vec![vec![0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0]],
            vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0]],
            vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0]],
        ];
        MdpSpec::new(
            horizon,
            0,
            Objective::MaximizeReward,
            vec![vec![1.0; 2]; 3],
            t,
        )
        .unwrap()
    }

    #[test]
    fn treatment_tree_iterated_cvar() {
        let spec = treatment_tree();
        let plan = plan_iterated_cvar(&spec, 0.05).unwrap();
        assert!((plan.tables.q(0, 0, 0) - 1.0).abs() < 1e-12);
        assert!((plan.tables.q(0, 0, 1) - 0.2).abs() < 1e-12);
        assert_eq!(plan.policy.action(0, 0), 1);
    }

    #[test]
    fn deterministic_chain_values() {
        let spec = chain(4);
        for alpha in [0.01, 0.3, 1.0] {
            let plan = plan_iterated_cvar(&spec, alpha).unwrap();
            assert_eq!(plan.tables.v(0, 0), 4.0);
        }
        assert_eq!(plan_worst_path(&spec).tables.v(0, 0), 4.0);
        let policy = Policy::constant(4, 3, 1);
        assert_eq!(
            evaluate_total_cvar_fixed_policy(&spec, &policy, 0.2, 10).unwrap(),
            4.0
        );
    }

    #[test]
    fn terminal_row_is_zero_and_greedy_is_consistent() {
        let spec = random_mdp(4, 3, 3, 5, None).unwrap();
        let plan = plan_iterated_cvar(&spec, 0.3).unwrap();
        assert!(plan.tables.v_step(3).iter().all(|v| *v == 0.0));
        for h in 0..3 {
            for s in 0..4 {
                let a = plan.policy.action(h, s);
                assert_eq!(plan.tables.v(h, s), plan.tables.q(h, s, a));
                assert!(plan
                    .tables
                    .q_row(h, s)
                    .iter()
                    .all(|q| *q <= plan.tables.v(h, s)));
                assert!(plan.tables.q_row(h, s)[..a]
                    .iter()
                    .all(|q| *q < plan.tables.v(h, s)));
            }
        }
    }

    #[test]
    fn evaluating_the_optimal_policy_is_a_fixed_point() {
        let spec = random_mdp(4, 2, 3, 11, None).unwrap();
        let plan = plan_iterated_cvar(&spec, 0.4).unwrap();
        let eval = evaluate_policy_iterated_cvar(&spec, &plan.policy, 0.4).unwrap();
        assert!(eval.max_abs_v_diff(&plan.tables) < 1e-12);
    }

    #[test]
    fn brute_force_agrees_on_small_instance() {
        let spec = random_mdp(3, 2, 2, 9, None).unwrap();
        let dp = plan_iterated_cvar(&spec, 0.3).unwrap();
        let bf = brute_force_plan(&spec, 0.3, 1 << 20).unwrap();
        assert!(dp.tables.max_abs_diff(&bf.tables) < 1e-10);
        let eval = evaluate_policy_iterated_cvar(&spec, &bf.policy, 0.3).unwrap();
        assert!(eval.max_abs_v_diff(&dp.tables) < 1e-10);
    }

    #[test]
    fn brute_force_single_action() {
        let spec = random_mdp(3, 1, 3, 2, None).unwrap();
        let bf = brute_force_plan(&spec, 0.5, 10).unwrap();
        let eval = evaluate_policy_iterated_cvar(&spec, &Policy::constant(3, 3, 0), 0.5).unwrap();
        assert_eq!(bf.tables, eval);
    }

    #[test]
    fn brute_force_cap() {
        let spec = random_mdp(4, 3, 3, 2, None).unwrap();
        assert!(matches!(
            brute_force_plan(&spec, 0.5, 1000),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn alpha_validation() {
        let spec = chain(2);
        assert!(plan_iterated_cvar(&spec, 0.0).is_err());
        assert!(evaluate_policy_iterated_cvar(&spec, &Policy::constant(2, 3, 0), 1.01).is_err());
        assert!(brute_force_plan(&spec, -1.0, 100).is_err());
    }

    #[test]
    fn risk_neutral_single_step() {
        let spec = random_mdp(3, 4, 1, 21, None).unwrap();
        let plan = plan_risk_neutral(&spec);
        let best = (0..4)
            .map(|a| spec.reward(0, a))
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(plan.tables.v(0, 0), best);
    }

    #[test]
    fn total_cvar_trajectory_cap() {
        let spec = random_mdp(3, 2, 4, 1, None).unwrap();
        let policy = Policy::constant(4, 3, 0);
        assert!(matches!(
            evaluate_total_cvar_fixed_policy(&spec, &policy, 0.5, 5),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn plan_json_layout() {
        let spec = chain(2);
        let text = plan_iterated_cvar(&spec, 0.5).unwrap().to_json().unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["v"].as_array().unwrap().len(), 3);
        assert_eq!(value["q"][0][0].as_array().unwrap().len(), 2);
        assert_eq!(value["policy"].as_array().unwrap().len(), 2);
    }
}
