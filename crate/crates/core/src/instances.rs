//! Instance generators: the layered experiment MDP, the lower-bound
//! constructions, the treatment tree, and random fixtures.
//!
//! Rewards attached to states are encoded as `r(s, a)` constant over `a`.
//! Terminal states (leaves, absorbing sinks) loop onto themselves.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::mdp::{seeded_rng, MdpSpec, Objective};

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

/// Mutable tables used while assembling an instance.
struct Builder {
    ns: usize,
    na: usize,
    reward: Vec<f64>,
    transition: Vec<f64>,
    names: Vec<String>,
}

impl Builder {
    fn new(ns: usize, na: usize) -> Self {
        Self {
            ns,
            na,
            reward: vec![0.0; ns * na],
            transition: vec![0.0; ns * na * ns],
            names: (0..ns).map(|s| format!("s{s}")).collect(),
        }
    }

    fn name(&mut self, s: usize, name: impl Into<String>) {
        self.names[s] = name.into();
    }

    fn state_reward(&mut self, s: usize, r: f64) {
        for a in 0..self.na {
            self.reward[s * self.na + a] = r;
        }
    }

    fn set(&mut self, s: usize, a: usize, successors: &[(usize, f64)]) {
        let start = (s * self.na + a) * self.ns;
        self.transition[start..start + self.ns]
            .iter_mut()
            .for_each(|p| *p = 0.0);
        for &(next, p) in successors {
            self.transition[start + next] += p;
        }
    }

    fn all_actions(&mut self, s: usize, successors: &[(usize, f64)]) {
        for a in 0..self.na {
            self.set(s, a, successors);
        }
    }

    fn absorbing(&mut self, s: usize) {
        self.all_actions(s, &[(s, 1.0)]);
    }

    fn build(self, horizon: usize, objective: Objective) -> Result<MdpSpec> {
        MdpSpec::from_flat(
            self.ns,
            self.na,
            horizon,
            0,
            objective,
            self.reward,
            self.transition,
        )?
        .with_state_names(self.names)
    }
}

/// The `H`-layered MDP with `S = 3(H-1) + 1` states.
///
/// Layer 1 holds the initial state; every later layer holds three states with
/// rewards 1, 0 and 0.4. Actions `0..A-1` move to the first two states of the
/// next layer with probability 1/2 each, and the last action moves to the
/// second and third with probabilities 0.001 and 0.999.
pub fn layered_experiment_mdp(horizon: usize, num_actions: usize) -> Result<MdpSpec> {
    if horizon < 2 {
        return Err(invalid(format!("layered MDP needs H >= 2, got {horizon}")));
    }
    if num_actions < 2 {
        return Err(invalid(format!(
            "layered MDP needs A >= 2, got {num_actions}"
        )));
    }
    let ns = 3 * (horizon - 1) + 1;
    let mut b = Builder::new(ns, num_actions);
    // first state of layer `layer` (1-based, layer >= 2)
    let first = |layer: usize| 3 * (layer - 2) + 1;
    for layer in 2..=horizon {
        for (offset, r) in [1.0, 0.0, 0.4].into_iter().enumerate() {
            b.state_reward(first(layer) + offset, r);
        }
    }
    for layer in 1..=horizon {
        let states: Vec<usize> = if layer == 1 {
            vec![0]
        } else {
            (first(layer)..first(layer) + 3).collect()
        };
        for s in states {
            if layer == horizon {
                b.absorbing(s);
                continue;
            }
            let next = first(layer + 1);
            for a in 0..num_actions - 1 {
                b.set(s, a, &[(next, 0.5), (next + 1, 0.5)]);
            }
            b.set(s, num_actions - 1, &[(next + 1, 0.001), (next + 2, 0.999)]);
        }
    }
    b.build(horizon, Objective::MaximizeReward)
}

/// Parameters of the hard-to-reach bandit chain.
///
/// States are `s_1..s_n` followed by the absorbing `x_1, x_2, x_3` with
/// per-step rewards 1, 0.8 and 0.2. The bandit state `s_n` has one optimal
/// action whose bad-outcome probability is smaller by `eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainLowerBound {
    pub n: usize,
    pub num_actions: usize,
    pub mu: f64,
    pub alpha: f64,
    pub eta: f64,
    pub optimal_action: usize,
    /// Defaults to `2n + 2`.
    pub horizon: Option<usize>,
    /// Reroute the `s_1 -> x_3` mass to `x_1`.
    pub remove_s1_x3_edge: bool,
}

impl ChainLowerBound {
    pub fn new(
        n: usize,
        num_actions: usize,
        mu: f64,
        alpha: f64,
        eta: f64,
        optimal_action: usize,
    ) -> Self {
        Self {
            n,
            num_actions,
            mu,
            alpha,
            eta,
            optimal_action,
            horizon: None,
            remove_s1_x3_edge: false,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon.unwrap_or(2 * self.n + 2)
    }

    /// Index of `s_i` (1-based `i`).
    pub fn s(&self, i: usize) -> usize {
        i - 1
    }

    /// Index of `x_i` (1-based `i`).
    pub fn x(&self, i: usize) -> usize {
        self.n + i - 1
    }

    pub fn build(&self) -> Result<MdpSpec> {
        let &Self {
            n,
            num_actions,
            mu,
            alpha,
            eta,
            optimal_action,
            ..
        } = self;
        let horizon = self.horizon();
        if n < 2 {
            return Err(invalid(format!("chain needs n >= 2, got {n}")));
        }
        if num_actions < 2 {
            return Err(invalid(format!("chain needs A >= 2, got {num_actions}")));
        }
        if !(0.0 < alpha && alpha < mu && mu < 1.0 / 3.0) {
            return Err(invalid(format!(
                "need 0 < alpha < mu < 1/3, got alpha={alpha}, mu={mu}"
            )));
        }
        if !(0.0 < eta && eta < alpha) {
            return Err(invalid(format!(
                "need 0 < eta < alpha, got eta={eta}, alpha={alpha}"
            )));
        }
        if 2 * n >= horizon {
            return Err(invalid(format!("need n < H/2, got n={n}, H={horizon}")));
        }
        if optimal_action >= num_actions {
            return Err(invalid(format!(
                "optimal action {optimal_action} out of range"
            )));
        }
        let mut b = Builder::new(n + 3, num_actions);
        for i in 1..=n {
            b.name(self.s(i), format!("s{i}"));
        }
        for (i, r) in [(1, 1.0), (2, 0.8), (3, 0.2)] {
            b.name(self.x(i), format!("x{i}"));
            b.state_reward(self.x(i), r);
            b.absorbing(self.x(i));
        }
        let (x1, x2, x3) = (self.x(1), self.x(2), self.x(3));
        let x3_edge = if self.remove_s1_x3_edge { x1 } else { x3 };
        b.all_actions(
            self.s(1),
            &[
                (self.s(2), mu),
                (x1, 1.0 - 3.0 * mu),
                (x2, mu),
                (x3_edge, mu),
            ],
        );
        for i in 2..n {
            b.all_actions(self.s(i), &[(self.s(i + 1), mu), (x1, 1.0 - mu)]);
        }
        for a in 0..num_actions {
            let bad = if a == optimal_action {
                alpha - eta
            } else {
                alpha
            };
            b.set(self.s(n), a, &[(x2, 1.0 - bad), (x3, bad)]);
        }
        b.build(horizon, Objective::MaximizeReward)
    }
}

/// Hard-to-reach bandit chain (see [`ChainLowerBound`]) with the default horizon.
pub fn regret_lb_chain(
    n: usize,
    num_actions: usize,
    mu: f64,
    alpha: f64,
    eta: f64,
    optimal_action: usize,
) -> Result<MdpSpec> {
    ChainLowerBound::new(n, num_actions, mu, alpha, eta, optimal_action).build()
}

/// Dual-chain construction whose rarest state is reached with `gamma^(H-1)`.
///
/// States: `s_1..s_n`, `s'_2..s'_n`, then absorbing `x_1..x_4` with rewards
/// 1, 0.8, 0.2, 1. The horizon is `n + 1`; the bandit state `s_n` sits at the
/// end of the `alpha`-chain and the `gamma`-chain ends in `x_4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaChainLowerBound {
    pub n: usize,
    pub num_actions: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub eta: f64,
    pub optimal_action: usize,
}

impl AlphaChainLowerBound {
    pub fn horizon(&self) -> usize {
        self.n + 1
    }

    pub fn s(&self, i: usize) -> usize {
        i - 1
    }

    /// Index of `s'_i`, `2 <= i <= n`.
    pub fn s_prime(&self, i: usize) -> usize {
        self.n + i - 2
    }

    pub fn x(&self, i: usize) -> usize {
        2 * self.n - 1 + i - 1
    }

    pub fn build(&self) -> Result<MdpSpec> {
        let &Self {
            n,
            num_actions,
            alpha,
            gamma,
            eta,
            optimal_action,
        } = self;
        if n < 2 {
            return Err(invalid(format!("alpha chain needs n >= 2, got {n}")));
        }
        if num_actions < 2 {
            return Err(invalid(format!(
                "alpha chain needs A >= 2, got {num_actions}"
            )));
        }
        if !(0.0 < gamma && gamma < alpha && alpha < 0.25) {
            return Err(invalid(format!(
                "need 0 < gamma < alpha < 1/4, got gamma={gamma}, alpha={alpha}"
            )));
        }
        if !(0.0 < eta && eta < alpha) {
            return Err(invalid(format!(
                "need 0 < eta < alpha, got eta={eta}, alpha={alpha}"
            )));
        }
        if optimal_action >= num_actions {
            return Err(invalid(format!(
                "optimal action {optimal_action} out of range"
            )));
        }
        let mut b = Builder::new(2 * n + 3, num_actions);
        for i in 1..=n {
            b.name(self.s(i), format!("s{i}"));
        }
        for i in 2..=n {
            b.name(self.s_prime(i), format!("s'{i}"));
        }
        for (i, r) in [(1, 1.0), (2, 0.8), (3, 0.2), (4, 1.0)] {
            b.name(self.x(i), format!("x{i}"));
            b.state_reward(self.x(i), r);
            b.absorbing(self.x(i));
        }
        let x1 = self.x(1);
        b.all_actions(
            self.s(1),
            &[
                (self.s(2), alpha),
                (self.s_prime(2), gamma),
                (x1, 1.0 - gamma - alpha),
            ],
        );
        for i in 2..n {
            b.all_actions(self.s(i), &[(self.s(i + 1), alpha), (x1, 1.0 - alpha)]);
            b.all_actions(
                self.s_prime(i),
                &[(self.s_prime(i + 1), gamma), (x1, 1.0 - gamma)],
            );
        }
        b.all_actions(self.s_prime(n), &[(self.x(4), gamma), (x1, 1.0 - gamma)]);
        for a in 0..num_actions {
            let bad = if a == optimal_action {
                alpha - eta
            } else {
                alpha
            };
            b.set(self.s(n), a, &[(self.x(2), 1.0 - bad), (self.x(3), bad)]);
        }
        b.build(self.horizon(), Objective::MaximizeReward)
    }
}

pub fn regret_lb_alpha(
    n: usize,
    num_actions: usize,
    alpha: f64,
    gamma: f64,
    eta: f64,
    optimal_action: usize,
) -> Result<MdpSpec> {
    AlphaChainLowerBound {
        n,
        num_actions,
        alpha,
        gamma,
        eta,
        optimal_action,
    }
    .build()
}

/// Two-action worst-path bandit chain.
///
/// Same skeleton as [`ChainLowerBound`] with `mu = alpha`; at `s_n` the
/// optimal action reaches `x_2` surely while the other reaches `x_3` with
/// probability `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstPathLowerBound {
    pub n: usize,
    pub alpha: f64,
    pub optimal_action: usize,
    /// Defaults to `4n`.
    pub horizon: Option<usize>,
    pub remove_s1_x3_edge: bool,
}

impl WorstPathLowerBound {
    pub fn new(n: usize, alpha: f64, optimal_action: usize, remove_s1_x3_edge: bool) -> Self {
        Self {
            n,
            alpha,
            optimal_action,
            horizon: None,
            remove_s1_x3_edge,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon.unwrap_or(4 * self.n)
    }

    pub fn s(&self, i: usize) -> usize {
        i - 1
    }

    pub fn x(&self, i: usize) -> usize {
        self.n + i - 1
    }

    pub fn suboptimal_action(&self) -> usize {
        1 - self.optimal_action
    }

    pub fn build(&self) -> Result<MdpSpec> {
        let &Self {
            n,
            alpha,
            optimal_action,
            ..
        } = self;
        let horizon = self.horizon();
        if n < 2 {
            return Err(invalid(format!("worst-path chain needs n >= 2, got {n}")));
        }
        if !(0.0 < alpha && alpha < 0.25) {
            return Err(invalid(format!("need 0 < alpha < 1/4, got {alpha}")));
        }
        if optimal_action >= 2 {
            return Err(invalid(format!(
                "optimal action must be 0 or 1, got {optimal_action}"
            )));
        }
        if horizon <= n {
            return Err(invalid(format!("need H > n, got H={horizon}, n={n}")));
        }
        let mut b = Builder::new(n + 3, 2);
        for i in 1..=n {
            b.name(self.s(i), format!("s{i}"));
        }
        for (i, r) in [(1, 1.0), (2, 0.8), (3, 0.2)] {
            b.name(self.x(i), format!("x{i}"));
            b.state_reward(self.x(i), r);
            b.absorbing(self.x(i));
        }
        let (x1, x2, x3) = (self.x(1), self.x(2), self.x(3));
        let x3_edge = if self.remove_s1_x3_edge { x1 } else { x3 };
        b.all_actions(
            self.s(1),
            &[
                (self.s(2), alpha),
                (x1, 1.0 - 3.0 * alpha),
                (x2, alpha),
                (x3_edge, alpha),
            ],
        );
        for i in 2..n {
            b.all_actions(self.s(i), &[(self.s(i + 1), alpha), (x1, 1.0 - alpha)]);
        }
        b.set(self.s(n), optimal_action, &[(x2, 1.0)]);
        b.set(
            self.s(n),
            self.suboptimal_action(),
            &[(x2, 1.0 - alpha), (x3, alpha)],
        );
        b.build(horizon, Objective::MaximizeReward)
    }
}

pub fn worst_path_lb(
    n: usize,
    alpha: f64,
    optimal_action: usize,
    remove_s1_x3_edge: bool,
) -> Result<MdpSpec> {
    WorstPathLowerBound::new(n, alpha, optimal_action, remove_s1_x3_edge).build()
}

/// Four-layer binary treatment tree in cost mode.
///
/// Action 0 at `s1` enters the left subtree (branch probabilities 0.05/0.95),
/// action 1 the right one (0.01/0.99); both actions behave identically
/// elsewhere. Leaf costs: `s8`, `s12` = 1; `s13`, `s14` = 0.5; `s9`, `s10` =
/// 0.4; `s11`, `s15` = 0. State `s{i}` has index `i - 1`.
pub fn treatment_tree() -> MdpSpec {
    let mut b = Builder::new(15, 2);
    for s in 0..15 {
        b.name(s, format!("s{}", s + 1));
    }
    let idx = |i: usize| i - 1;
    b.set(idx(1), 0, &[(idx(2), 1.0)]);
    b.set(idx(1), 1, &[(idx(3), 1.0)]);
    b.all_actions(idx(2), &[(idx(4), 0.05), (idx(5), 0.95)]);
    b.all_actions(idx(3), &[(idx(6), 0.01), (idx(7), 0.99)]);
    b.all_actions(idx(4), &[(idx(8), 0.05), (idx(9), 0.95)]);
    b.all_actions(idx(5), &[(idx(10), 0.05), (idx(11), 0.95)]);
    b.all_actions(idx(6), &[(idx(12), 0.01), (idx(13), 0.99)]);
    b.all_actions(idx(7), &[(idx(14), 0.01), (idx(15), 0.99)]);
    for (leaf, cost) in [
        (8, 1.0),
        (9, 0.4),
        (10, 0.4),
        (11, 0.0),
        (12, 1.0),
        (13, 0.5),
        (14, 0.5),
        (15, 0.0),
    ] {
        b.state_reward(idx(leaf), cost);
        b.absorbing(idx(leaf));
    }
    b.build(4, Objective::MinimizeCost)
        .expect("treatment tree is well formed")
}

/// Random MDP with Dirichlet(1, ..., 1) rows and uniform rewards.
///
/// With `min_prob`, row entries below the floor are zeroed and the row is
/// renormalised; the largest entry of a row is always kept.
pub fn random_mdp(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    seed: u64,
    min_prob: Option<f64>,
) -> Result<MdpSpec> {
    if num_states == 0 || num_actions == 0 || horizon == 0 {
        return Err(invalid("random MDP dimensions must be positive"));
    }
    let mut rng = seeded_rng(seed);
    let mut reward = Vec::with_capacity(num_states * num_actions);
    let mut transition = Vec::with_capacity(num_states * num_actions * num_states);
    for _ in 0..num_states * num_actions {
        reward.push(rng.random::<f64>());
        let mut row: Vec<f64> = (0..num_states).map(|_| Exp1.sample(&mut rng)).collect();
        normalise(&mut row);
        if let Some(floor) = min_prob {
            let keep = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap();
            for (i, p) in row.iter_mut().enumerate() {
                if *p < floor && i != keep {
                    *p = 0.0;
                }
            }
            normalise(&mut row);
        }
        transition.extend(row);
    }
    MdpSpec::from_flat(
        num_states,
        num_actions,
        horizon,
        0,
        Objective::MaximizeReward,
        reward,
        transition,
    )
}

fn normalise(row: &mut [f64]) {
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|p| *p /= total);
}
