//! Finite episodic MDPs, deterministic Markovian policies, and the statistics
//! collected while interacting with them.
//!
//! Steps are indexed from 0 internally: step `h` in `0..horizon` is the
//! `(h+1)`-th decision of an episode.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk::PROB_TOLERANCE;

/// Seeded generator used for every simulation in the crate.
pub type SimRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Default cap on the number of enumerated policies or trajectories.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Objective {
    #[default]
    #[serde(rename = "max_reward")]
    MaximizeReward,
    #[serde(rename = "min_cost")]
    MinimizeCost,
}

/// A finite episodic MDP with known deterministic rewards in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpSpec {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    initial_state: usize,
    objective: Objective,
    /// `reward[s * A + a]`
    reward: Vec<f64>,
    /// `transition[(s * A + a) * S + s']`
    transition: Vec<f64>,
    /// Successor states with positive probability, per `(s, a)`.
    support: Vec<Vec<usize>>,
    state_names: Option<Vec<String>>,
}

impl MdpSpec {
    /// Builds a spec from nested tables `reward[s][a]` and `transition[s][a][s']`.
    pub fn new(
        horizon: usize,
        initial_state: usize,
        objective: Objective,
        reward: Vec<Vec<f64>>,
        transition: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let num_states = transition.len();
        if num_states == 0 {
            return Err(Error::InvalidSpec("no states".into()));
        }
        let num_actions = transition[0].len();
        if num_actions == 0 {
            return Err(Error::InvalidSpec("no actions".into()));
        }
        if horizon == 0 {
            return Err(Error::InvalidSpec("horizon must be positive".into()));
        }
        if reward.len() != num_states {
            return Err(Error::InvalidSpec(format!(
                "reward has {} rows for {num_states} states",
                reward.len()
            )));
        }
        let mut flat_reward = Vec::with_capacity(num_states * num_actions);
        let mut flat_transition = Vec::with_capacity(num_states * num_actions * num_states);
        for s in 0..num_states {
            if reward[s].len() != num_actions || transition[s].len() != num_actions {
                return Err(Error::InvalidSpec(format!(
                    "state {s} does not have {num_actions} actions"
                )));
            }
            for a in 0..num_actions {
                if transition[s][a].len() != num_states {
                    return Err(Error::InvalidSpec(format!(
                        "transition row ({s}, {a}) has length {}",
                        transition[s][a].len()
                    )));
                }
                flat_reward.push(reward[s][a]);
                flat_transition.extend_from_slice(&transition[s][a]);
            }
        }
        Self::from_flat(
            num_states,
            num_actions,
            horizon,
            initial_state,
            objective,
            flat_reward,
            flat_transition,
        )
    }

    pub(crate) fn from_flat(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        initial_state: usize,
        objective: Objective,
        reward: Vec<f64>,
        transition: Vec<f64>,
    ) -> Result<Self> {
        if initial_state >= num_states {
            return Err(Error::InvalidSpec(format!(
                "initial state {initial_state} out of range for {num_states} states"
            )));
        }
        debug_assert_eq!(reward.len(), num_states * num_actions);
        debug_assert_eq!(transition.len(), num_states * num_actions * num_states);
        for (i, r) in reward.iter().enumerate() {
            if !(r.is_finite() && (0.0..=1.0).contains(r)) {
                return Err(Error::InvalidSpec(format!(
                    "reward ({}, {}) = {r} outside [0, 1]",
                    i / num_actions,
                    i % num_actions
                )));
            }
        }
        let mut support = Vec::with_capacity(num_states * num_actions);
        for (sa, row) in transition.chunks(num_states).enumerate() {
            if let Some(p) = row
                .iter()
                .find(|p| !(p.is_finite() && (0.0..=1.0).contains(*p)))
            {
                return Err(Error::InvalidSpec(format!(
                    "transition ({}, {}) has entry {p} outside [0, 1]",
                    sa / num_actions,
                    sa % num_actions
                )));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > PROB_TOLERANCE {
                return Err(Error::InvalidSpec(format!(
                    "transition ({}, {}) sums to {total}",
                    sa / num_actions,
                    sa % num_actions
                )));
            }
            support.push(
                row.iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(i, _)| i)
                    .collect(),
            );
        }
        Ok(Self {
            num_states,
            num_actions,
            horizon,
            initial_state,
            objective,
            reward,
            transition,
            support,
            state_names: None,
        })
    }

    pub fn with_state_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_states {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {} states",
                names.len(),
                self.num_states
            )));
        }
        self.state_names = Some(names);
        Ok(self)
    }

    /// Same dynamics with a different horizon.
    pub fn with_horizon(mut self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidSpec("horizon must be positive".into()));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn state_names(&self) -> Option<&[String]> {
        self.state_names.as_deref()
    }

    /// Index of the state called `name` in the generator's name table.
    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.state_names.as_ref()?.iter().position(|n| n == name)
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.num_actions + a]
    }

    pub fn reward_table(&self) -> &[f64] {
        &self.reward
    }

    /// `p(.|s, a)` as a slice over successor states.
    #[inline]
    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.num_actions + a) * self.num_states;
        &self.transition[start..start + self.num_states]
    }

    #[inline]
    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transition[(s * self.num_actions + a) * self.num_states + next]
    }

    /// Successors of `(s, a)` with strictly positive probability.
    #[inline]
    pub fn support(&self, s: usize, a: usize) -> &[usize] {
        &self.support[s * self.num_actions + a]
    }

    /// Number of deterministic Markovian policies, `A^(S*H)`, saturating.
    pub fn policy_count(&self) -> u128 {
        let cells = (self.num_states * self.horizon) as u32;
        (self.num_actions as u128)
            .checked_pow(cells)
            .unwrap_or(u128::MAX)
    }

    fn sample_next(&self, s: usize, a: usize, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        let row = self.transition_row(s, a);
        let support = self.support(s, a);
        let mut cum = 0.0;
        for &next in support {
            cum += row[next];
            if u < cum {
                return next;
            }
        }
        // rounding left u above the accumulated mass
        *support.last().expect("rows sum to one")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&MdpDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MdpDocument = serde_json::from_str(text)?;
        doc.try_into()
    }
}

/// On-disk layout of an [`MdpSpec`]; transitions are indexed `[s][a][s']`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdpDocument {
    #[serde(rename = "S")]
    pub num_states: usize,
    #[serde(rename = "A")]
    pub num_actions: usize,
    #[serde(rename = "H")]
    pub horizon: usize,
    pub initial_state: usize,
    #[serde(default)]
    pub objective: Objective,
    pub reward: Vec<Vec<f64>>,
    pub transition: Vec<Vec<Vec<f64>>>,
}

impl From<&MdpSpec> for MdpDocument {
    fn from(spec: &MdpSpec) -> Self {
        let (ns, na) = (spec.num_states, spec.num_actions);
        MdpDocument {
            num_states: ns,
            num_actions: na,
            horizon: spec.horizon,
            initial_state: spec.initial_state,
            objective: spec.objective,
            reward: spec.reward.chunks(na).map(<[f64]>::to_vec).collect(),
            transition: (0..ns)
                .map(|s| {
                    (0..na)
                        .map(|a| spec.transition_row(s, a).to_vec())
                        .collect()
                })
                .collect(),
        }
    }
}

impl TryFrom<MdpDocument> for MdpSpec {
    type Error = Error;

    fn try_from(doc: MdpDocument) -> Result<Self> {
        if doc.transition.len() != doc.num_states
            || doc
                .transition
                .iter()
                .any(|row| row.len() != doc.num_actions)
        {
            return Err(Error::DimensionMismatch(format!(
                "transition table does not match S={} A={}",
                doc.num_states, doc.num_actions
            )));
        }
        MdpSpec::new(
            doc.horizon,
            doc.initial_state,
            doc.objective,
            doc.reward,
            doc.transition,
        )
    }
}

/// Deterministic Markovian policy: one action per `(step, state)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Policy {
    horizon: usize,
    num_states: usize,
    table: Vec<usize>,
}

impl Policy {
    pub fn new(table: Vec<Vec<usize>>, num_actions: usize) -> Result<Self> {
        let horizon = table.len();
        let num_states = table.first().map_or(0, Vec::len);
        if table.iter().any(|row| row.len() != num_states) {
            return Err(Error::DimensionMismatch("ragged policy table".into()));
        }
        if let Some(a) = table.iter().flatten().find(|a| **a >= num_actions) {
            return Err(Error::DimensionMismatch(format!(
                "action {a} out of range for {num_actions} actions"
            )));
        }
        Ok(Self {
            horizon,
            num_states,
            table: table.into_iter().flatten().collect(),
        })
    }

    /// The policy that plays `action` everywhere.
    pub fn constant(horizon: usize, num_states: usize, action: usize) -> Self {
        Self {
            horizon,
            num_states,
            table: vec![action; horizon * num_states],
        }
    }

    pub(crate) fn from_flat(horizon: usize, num_states: usize, table: Vec<usize>) -> Self {
        debug_assert_eq!(table.len(), horizon * num_states);
        Self {
            horizon,
            num_states,
            table,
        }
    }

    #[inline]
    pub fn action(&self, h: usize, s: usize) -> usize {
        self.table[h * self.num_states + s]
    }

    #[inline]
    pub fn set_action(&mut self, h: usize, s: usize, a: usize) {
        self.table[h * self.num_states + s] = a;
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.table
            .chunks(self.num_states.max(1))
            .map(<[usize]>::to_vec)
            .collect()
    }

    pub fn check_against(&self, spec: &MdpSpec) -> Result<()> {
        if self.horizon != spec.horizon() || self.num_states != spec.num_states() {
            return Err(Error::DimensionMismatch(format!(
                "policy is {}x{}, MDP has H={} S={}",
                self.horizon,
                self.num_states,
                spec.horizon(),
                spec.num_states()
            )));
        }
        if let Some(a) = self.table.iter().find(|a| **a >= spec.num_actions()) {
            return Err(Error::DimensionMismatch(format!(
                "action {a} out of range for {} actions",
                spec.num_actions()
            )));
        }
        Ok(())
    }
}

/// Iterates over every deterministic Markovian policy in lexicographic order
/// of the flattened `(step, state)` table, the last cell varying fastest.
pub struct PolicyEnumerator {
    current: Option<Vec<usize>>,
    horizon: usize,
    num_states: usize,
    num_actions: usize,
}

impl PolicyEnumerator {
    pub fn new(horizon: usize, num_states: usize, num_actions: usize) -> Self {
        let current = (num_actions > 0).then(|| vec![0; horizon * num_states]);
        Self {
            current,
            horizon,
            num_states,
            num_actions,
        }
    }

    pub fn for_spec(spec: &MdpSpec) -> Self {
        Self::new(spec.horizon(), spec.num_states(), spec.num_actions())
    }
}

impl Iterator for PolicyEnumerator {
    type Item = Policy;

    fn next(&mut self) -> Option<Policy> {
        let table = self.current.as_mut()?;
        let policy = Policy::from_flat(self.horizon, self.num_states, table.clone());
        if !next_assignment(table, self.num_actions) {
            self.current = None;
        }
        Some(policy)
    }
}

/// Odometer step over `choice` in base `base`, last digit fastest.
/// Returns `false` after wrapping past the final assignment.
pub(crate) fn next_assignment(choice: &mut [usize], base: usize) -> bool {
    for digit in choice.iter_mut().rev() {
        *digit += 1;
        if *digit < base {
            return true;
        }
        *digit = 0;
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub episode_index: usize,
    pub steps: Vec<Step>,
}

/// Plays one episode from the initial state.
pub fn simulate_episode(
    spec: &MdpSpec,
    policy: &Policy,
    episode_index: usize,
    rng: &mut impl Rng,
) -> Result<Trajectory> {
    policy.check_against(spec)?;
    let mut steps = Vec::with_capacity(spec.horizon());
    rollout(spec, policy, rng, &mut steps);
    Ok(Trajectory {
        episode_index,
        steps,
    })
}

/// Like [`simulate_episode`] but refills `traj` in place.
pub fn simulate_episode_into(
    spec: &MdpSpec,
    policy: &Policy,
    episode_index: usize,
    rng: &mut impl Rng,
    traj: &mut Trajectory,
) -> Result<()> {
    policy.check_against(spec)?;
    traj.episode_index = episode_index;
    rollout(spec, policy, rng, &mut traj.steps);
    Ok(())
}

fn rollout(spec: &MdpSpec, policy: &Policy, rng: &mut impl Rng, steps: &mut Vec<Step>) {
    steps.clear();
    let mut state = spec.initial_state();
    for h in 0..spec.horizon() {
        let action = policy.action(h, state);
        let next_state = spec.sample_next(state, action, rng);
        steps.push(Step {
            state,
            action,
            reward: spec.reward(state, action),
            next_state,
        });
        state = next_state;
    }
}

/// Visit counts `n(s, a)` and `n(s', s, a)` with the derived empirical kernel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalModel {
    num_states: usize,
    num_actions: usize,
    count_sa: Vec<u64>,
    count_sas: Vec<u64>,
}

impl EmpiricalModel {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
            count_sa: vec![0; num_states * num_actions],
            count_sas: vec![0; num_states * num_actions * num_states],
        }
    }

    pub fn for_spec(spec: &MdpSpec) -> Self {
        Self::new(spec.num_states(), spec.num_actions())
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn count(&self, s: usize, a: usize) -> u64 {
        self.count_sa[s * self.num_actions + a]
    }

    #[inline]
    pub fn count_next(&self, s: usize, a: usize, next: usize) -> u64 {
        self.count_sas[(s * self.num_actions + a) * self.num_states + next]
    }

    /// Observed successor counts of `(s, a)`.
    #[inline]
    pub fn next_counts(&self, s: usize, a: usize) -> &[u64] {
        let start = (s * self.num_actions + a) * self.num_states;
        &self.count_sas[start..start + self.num_states]
    }

    /// Empirical `p̂(.|s, a)`, or `None` when `(s, a)` was never visited.
    pub fn empirical_row(&self, s: usize, a: usize) -> Option<Vec<f64>> {
        let n = self.count(s, a);
        (n > 0).then(|| {
            self.next_counts(s, a)
                .iter()
                .map(|&c| c as f64 / n as f64)
                .collect()
        })
    }

    pub fn total_count(&self) -> u64 {
        self.count_sa.iter().sum()
    }

    pub fn record(&mut self, s: usize, a: usize, next: usize) {
        assert!(
            s < self.num_states && a < self.num_actions && next < self.num_states,
            "index out of bounds"
        );
        self.count_sa[s * self.num_actions + a] += 1;
        self.count_sas[(s * self.num_actions + a) * self.num_states + next] += 1;
    }

    /// Adds one count per transition of `traj`.
    pub fn update(&mut self, traj: &Trajectory) -> Result<()> {
        for step in &traj.steps {
            if step.state >= self.num_states
                || step.next_state >= self.num_states
                || step.action >= self.num_actions
            {
                return Err(Error::DimensionMismatch(format!(
                    "step {step:?} outside the model"
                )));
            }
        }
        for step in &traj.steps {
            self.record(step.state, step.action, step.next_state);
        }
        Ok(())
    }
}

/// State-action visitation probabilities `w_h(s, a)` under a fixed policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Occupancy {
    num_states: usize,
    num_actions: usize,
    state: Vec<f64>,
    state_action: Vec<f64>,
}

impl Occupancy {
    pub fn horizon(&self) -> usize {
        self.state.len() / self.num_states
    }

    #[inline]
    pub fn state(&self, h: usize, s: usize) -> f64 {
        self.state[h * self.num_states + s]
    }

    #[inline]
    pub fn state_action(&self, h: usize, s: usize, a: usize) -> f64 {
        self.state_action[(h * self.num_states + s) * self.num_actions + a]
    }

    pub fn step_states(&self, h: usize) -> &[f64] {
        &self.state[h * self.num_states..(h + 1) * self.num_states]
    }
}

pub fn occupancy(spec: &MdpSpec, policy: &Policy) -> Result<Occupancy> {
    policy.check_against(spec)?;
    let (ns, na, horizon) = (spec.num_states(), spec.num_actions(), spec.horizon());
    let mut state = vec![0.0; horizon * ns];
    let mut state_action = vec![0.0; horizon * ns * na];
    state[spec.initial_state()] = 1.0;
    for h in 0..horizon {
        for s in 0..ns {
            let w = state[h * ns + s];
            if w == 0.0 {
                continue;
            }
            let a = policy.action(h, s);
            state_action[(h * ns + s) * na + a] = w;
            if h + 1 < horizon {
                for &next in spec.support(s, a) {
                    state[(h + 1) * ns + next] += w * spec.prob(s, a, next);
                }
            }
        }
    }
    Ok(Occupancy {
        num_states: ns,
        num_actions: na,
        state,
        state_action,
    })
}

/// Probability that `(s, a)` is visited at least once in an episode.
pub fn reach_probability(spec: &MdpSpec, policy: &Policy, target: (usize, usize)) -> Result<f64> {
    policy.check_against(spec)?;
    let (ts, ta) = target;
    if ts >= spec.num_states() || ta >= spec.num_actions() {
        return Err(Error::DimensionMismatch(format!(
            "target {target:?} outside the MDP"
        )));
    }
    let ns = spec.num_states();
    // mass of partial paths that have not yet visited the target
    let mut avoiding = vec![0.0; ns];
    avoiding[spec.initial_state()] = 1.0;
    let mut visited = 0.0;
    for h in 0..spec.horizon() {
        if policy.action(h, ts) == ta {
            visited += avoiding[ts];
            avoiding[ts] = 0.0;
        }
        if h + 1 == spec.horizon() {
            break;
        }
        let mut next = vec![0.0; ns];
        for (s, &w) in avoiding.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let a = policy.action(h, s);
            for &s2 in spec.support(s, a) {
                next[s2] += w * spec.prob(s, a, s2);
            }
        }
        avoiding = next;
    }
    Ok(visited)
}

/// Minimum positive state-visitation probability over all deterministic
/// Markovian policies, steps, and states.
///
/// Policies are enumerated step by step over the state distributions they can
/// induce: only action choices at states with positive mass are branched on,
/// and branches that produce an identical next-step distribution are merged.
/// The result equals the minimum over all `A^(S*H)` policies; `cap` bounds the
/// number of branches explored.
pub fn min_visitation(spec: &MdpSpec, cap: u128) -> Result<f64> {
    let ns = spec.num_states();
    let na = spec.num_actions();
    let mut start = vec![0.0; ns];
    start[spec.initial_state()] = 1.0;
    let mut frontier = vec![start];
    let mut best = f64::INFINITY;
    let mut explored: u128 = 0;
    for h in 0..spec.horizon() {
        let mut next_frontier = Vec::new();
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        for dist in &frontier {
            for &w in dist.iter().filter(|w| **w > 0.0) {
                best = best.min(w);
            }
            if h + 1 == spec.horizon() {
                continue;
            }
            let live: Vec<usize> = (0..ns).filter(|&s| dist[s] > 0.0).collect();
            let branches = (na as u128)
                .checked_pow(live.len() as u32)
                .unwrap_or(u128::MAX);
            explored = explored.saturating_add(branches);
            if explored > cap {
                return Err(Error::EnumerationTooLarge {
                    count: explored,
                    cap,
                });
            }
            let mut choice = vec![0usize; live.len()];
            loop {
                let mut out = vec![0.0; ns];
                for (i, &s) in live.iter().enumerate() {
                    let a = choice[i];
                    for &s2 in spec.support(s, a) {
                        out[s2] += dist[s] * spec.prob(s, a, s2);
                    }
                }
                if seen.insert(out.iter().map(|x| x.to_bits()).collect()) {
                    next_frontier.push(out);
                }
                if !next_assignment(&mut choice, na) {
                    break;
                }
            }
        }
        frontier = next_frontier;
    }
    Ok(best)
}
