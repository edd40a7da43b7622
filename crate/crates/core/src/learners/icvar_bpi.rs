//! Best policy identification under Iterated CVaR.
//!
//! Keeps optimistic (`Q̄`) and pessimistic (`Q̲`) estimates plus an upper
//! bound `G` on the estimation error of the greedy policy, propagated with
//! the empirical tail-conditional kernel of `V̲`. Stops once `J_1(s_1) <= eps`.

use super::{argmax, check_delta, check_scale, KnownPart};
use crate::error::{Error, Result};
use crate::mdp::{EmpiricalModel, MdpSpec, Policy, Trajectory};
use crate::planner::ValueTables;
use crate::risk::{ascending_order, check_alpha, cvar_in_order};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcvarBpiConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub alpha: f64,
    /// Multiplier on all confidence widths; 1 is the calibrated value.
    pub bonus_scale: f64,
}

impl IcvarBpiConfig {
    pub fn new(epsilon: f64, delta: f64, alpha: f64) -> Result<Self> {
        let config = Self {
            epsilon,
            delta,
            alpha,
            bonus_scale: 1.0,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_bonus_scale(mut self, scale: f64) -> Result<Self> {
        check_scale(scale)?;
        self.bonus_scale = scale;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        check_delta(self.delta)?;
        check_alpha(self.alpha)?;
        check_scale(self.bonus_scale)
    }

    pub fn delta_prime(&self) -> f64 {
        self.delta / 7.0
    }

    /// `L̃(k) = ln(2 H S A k^3 / delta')`.
    pub fn log_term(
        &self,
        episode: usize,
        horizon: usize,
        num_states: usize,
        num_actions: usize,
    ) -> f64 {
        let cells = (horizon * num_states * num_actions) as f64;
        let k = episode as f64;
        (2.0 * cells * k * k * k / self.delta_prime()).ln()
    }
}

/// Outcome of one planning step; both variants carry the greedy policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision<'a> {
    Stop(&'a Policy),
    Continue(&'a Policy),
}

impl<'a> Decision<'a> {
    pub fn policy(&self) -> &'a Policy {
        match *self {
            Decision::Stop(p) | Decision::Continue(p) => p,
        }
    }

    pub fn is_stop(&self) -> bool {
        matches!(self, Decision::Stop(_))
    }
}

#[derive(Debug, Clone)]
pub struct IcvarBpi {
    config: IcvarBpiConfig,
    known: KnownPart,
    model: EmpiricalModel,
    episodes: usize,
    upper: ValueTables,
    lower: ValueTables,
    error: ValueTables,
    policy: Policy,
    upper_order: Vec<usize>,
    lower_order: Vec<usize>,
}

impl IcvarBpi {
    pub fn new(spec: &MdpSpec, config: IcvarBpiConfig) -> Result<Self> {
        config.validate()?;
        let known = KnownPart::new(spec)?;
        let (ns, na, horizon) = (known.num_states, known.num_actions, known.horizon);
        Ok(Self {
            config,
            known,
            model: EmpiricalModel::for_spec(spec),
            episodes: 0,
            upper: ValueTables::zeros(horizon, ns, na),
            lower: ValueTables::zeros(horizon, ns, na),
            error: ValueTables::zeros(horizon, ns, na),
            policy: Policy::constant(horizon, ns, 0),
            upper_order: Vec::with_capacity(ns),
            lower_order: Vec::with_capacity(ns),
        })
    }

    pub fn config(&self) -> &IcvarBpiConfig {
        &self.config
    }

    /// `Q̄` and the policy-indexed `V̄`.
    pub fn upper(&self) -> &ValueTables {
        &self.upper
    }

    /// `Q̲` and the policy-indexed `V̲`.
    pub fn lower(&self) -> &ValueTables {
        &self.lower
    }

    /// `G` in the `q` slots and `J` in the `v` slots.
    pub fn error_bound(&self) -> &ValueTables {
        &self.error
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn episodes(&self) -> usize {
        self.episodes
    }

    pub fn model(&self) -> &EmpiricalModel {
        &self.model
    }

    /// Recomputes all tables for episode `k = episodes + 1` and applies the
    /// stopping rule.
    pub fn step(&mut self) -> Decision<'_> {
        let known = &self.known;
        let (ns, na, horizon) = (known.num_states, known.num_actions, known.horizon);
        let k = self.episodes + 1;
        let cap = horizon as f64;
        let alpha = self.config.alpha;
        let log_term = self.config.log_term(k, horizon, ns, na);
        let scale = self.config.bonus_scale;
        let hf = horizon as f64;
        let upper_width = scale * (hf / alpha) * log_term.sqrt();
        let lower_width = scale * (4.0 * hf / alpha) * (ns as f64 * log_term).sqrt();
        let error_width = scale * hf * (1.0 + 4.0 * (ns as f64).sqrt()) * log_term.sqrt() / alpha;
        for h in (0..horizon).rev() {
            let (q_upper, v_upper, next_upper) = self.upper.step_mut(h);
            let (q_lower, v_lower, next_lower) = self.lower.step_mut(h);
            let (g, j, next_error) = self.error.step_mut(h);
            ascending_order(next_upper, &mut self.upper_order);
            ascending_order(next_lower, &mut self.lower_order);
            for s in 0..ns {
                let row = s * na..(s + 1) * na;
                for a in 0..na {
                    let cell = s * na + a;
                    let n = self.model.count(s, a);
                    if n == 0 {
                        q_upper[cell] = cap;
                        q_lower[cell] = 0.0;
                        g[cell] = cap;
                        continue;
                    }
                    let inv = 1.0 / n as f64;
                    let root = inv.sqrt();
                    let counts = self.model.next_counts(s, a);
                    let prob = |i: usize| counts[i] as f64 * inv;
                    let r = known.reward(s, a);
                    let risk_upper = cvar_in_order(&self.upper_order, next_upper, prob, alpha);
                    let risk_lower = cvar_in_order(&self.lower_order, next_lower, prob, alpha);
                    // the tail of V̲ under p̂ weights J_{h+1}
                    let propagated = cvar_in_order(&self.lower_order, next_error, prob, alpha);
                    q_upper[cell] = (r + risk_upper + upper_width * root).min(cap);
                    q_lower[cell] = (r + risk_lower - lower_width * root).max(0.0);
                    g[cell] = (error_width * root + propagated).min(cap);
                }
                let best = argmax(&q_upper[row.clone()]);
                self.policy.set_action(h, s, best);
                v_upper[s] = q_upper[row.start + best];
                v_lower[s] = q_lower[row.start + best];
                j[s] = g[row.start + best];
            }
        }
        if self.error.v(0, known.initial_state) <= self.config.epsilon {
            Decision::Stop(&self.policy)
        } else {
            Decision::Continue(&self.policy)
        }
    }

    pub fn observe(&mut self, traj: &Trajectory) -> Result<()> {
        self.model.update(traj)?;
        self.episodes += 1;
        Ok(())
    }
}
