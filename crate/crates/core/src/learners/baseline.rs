//! Risk-neutral optimistic value iteration with Hoeffding bonuses, used as a
//! comparator: it optimises the expected return and ignores `alpha`.

use super::{argmax, check_delta, check_scale, KnownPart, Learner};
use crate::error::{Error, Result};
use crate::mdp::{EmpiricalModel, MdpSpec, Policy, Trajectory};
use crate::planner::ValueTables;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    pub total_episodes: usize,
    pub delta: f64,
    pub bonus_scale: f64,
}

impl BaselineConfig {
    pub fn new(total_episodes: usize, delta: f64) -> Result<Self> {
        let config = Self {
            total_episodes,
            delta,
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
        if self.total_episodes == 0 {
            return Err(Error::InvalidParameter(
                "total_episodes must be at least 1".into(),
            ));
        }
        check_delta(self.delta)?;
        check_scale(self.bonus_scale)
    }

    /// Same `L` as the Iterated CVaR learner, so only the backup differs.
    pub fn log_term(&self, horizon: usize, num_states: usize, num_actions: usize) -> f64 {
        let cells = (horizon * num_states * num_actions) as f64;
        (self.total_episodes as f64 * cells * 5.0 / self.delta).ln()
    }
}

#[derive(Debug, Clone)]
pub struct HoeffdingBaseline {
    config: BaselineConfig,
    known: KnownPart,
    log_term: f64,
    model: EmpiricalModel,
    episodes: usize,
    tables: ValueTables,
    policy: Policy,
    next: Vec<f64>,
}

impl HoeffdingBaseline {
    pub fn new(spec: &MdpSpec, config: BaselineConfig) -> Result<Self> {
        config.validate()?;
        let known = KnownPart::new(spec)?;
        let (ns, na, horizon) = (known.num_states, known.num_actions, known.horizon);
        Ok(Self {
            config,
            log_term: config.log_term(horizon, ns, na),
            known,
            model: EmpiricalModel::for_spec(spec),
            episodes: 0,
            tables: ValueTables::zeros(horizon, ns, na),
            policy: Policy::constant(horizon, ns, 0),
            next: vec![0.0; ns],
        })
    }

    pub fn tables(&self) -> &ValueTables {
        &self.tables
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    fn recompute(&mut self) {
        let known = &self.known;
        let (ns, na, horizon) = (known.num_states, known.num_actions, known.horizon);
        let cap = horizon as f64;
        let width = self.config.bonus_scale * cap * self.log_term.sqrt();
        for h in (0..horizon).rev() {
            self.next.copy_from_slice(self.tables.v_step(h + 1));
            for s in 0..ns {
                for a in 0..na {
                    let n = self.model.count(s, a);
                    let q = if n == 0 {
                        cap
                    } else {
                        let counts = self.model.next_counts(s, a);
                        let mean: f64 = counts
                            .iter()
                            .zip(&self.next)
                            .map(|(&c, v)| c as f64 * v)
                            .sum::<f64>()
                            / n as f64;
                        (known.reward(s, a) + mean + width / (n as f64).sqrt()).min(cap)
                    };
                    self.tables.set_q(h, s, a, q);
                }
                let best = argmax(self.tables.q_row(h, s));
                self.policy.set_action(h, s, best);
                self.tables.set_v(h, s, self.tables.q(h, s, best));
            }
        }
    }
}

impl Learner for HoeffdingBaseline {
    fn plan(&mut self) -> Result<&Policy> {
        let episode = self.episodes + 1;
        if episode > self.config.total_episodes {
            return Err(Error::EpisodeBudgetExceeded {
                episode,
                total: self.config.total_episodes,
            });
        }
        self.recompute();
        Ok(&self.policy)
    }

    fn observe(&mut self, traj: &Trajectory) -> Result<()> {
        self.model.update(traj)?;
        self.episodes += 1;
        Ok(())
    }

    fn episodes(&self) -> usize {
        self.episodes
    }

    fn model(&self) -> &EmpiricalModel {
        &self.model
    }
}
