//! Optimistic value iteration for Iterated CVaR regret minimisation.

use super::{argmax, check_delta, check_scale, KnownPart, Learner};
use crate::error::{Error, Result};
use crate::mdp::{EmpiricalModel, MdpSpec, Policy, Trajectory};
use crate::planner::ValueTables;
use crate::risk::{ascending_order, check_alpha, cvar_in_order};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcvarRmConfig {
    pub total_episodes: usize,
    pub delta: f64,
    pub alpha: f64,
    /// Multiplier on the exploration bonus; 1 is the calibrated bonus.
    pub bonus_scale: f64,
}

impl IcvarRmConfig {
    pub fn new(total_episodes: usize, delta: f64, alpha: f64) -> Result<Self> {
        let config = Self {
            total_episodes,
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
        if self.total_episodes == 0 {
            return Err(Error::InvalidParameter(
                "total_episodes must be at least 1".into(),
            ));
        }
        check_delta(self.delta)?;
        check_alpha(self.alpha)?;
        check_scale(self.bonus_scale)
    }

    pub fn delta_prime(&self) -> f64 {
        self.delta / 5.0
    }

    /// `L = ln(K H S A / delta')`.
    pub fn log_term(&self, horizon: usize, num_states: usize, num_actions: usize) -> f64 {
        let cells = (horizon * num_states * num_actions) as f64;
        (self.total_episodes as f64 * cells / self.delta_prime()).ln()
    }

    /// `(H / alpha) sqrt(L / n)`, times the bonus scale.
    pub fn bonus(&self, horizon: usize, log_term: f64, n: f64) -> f64 {
        self.bonus_scale * (horizon as f64 / self.alpha) * (log_term / n).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct IcvarRm {
    config: IcvarRmConfig,
    known: KnownPart,
    log_term: f64,
    model: EmpiricalModel,
    episodes: usize,
    tables: ValueTables,
    policy: Policy,
    order: Vec<usize>,
}

impl IcvarRm {
    pub fn new(spec: &MdpSpec, config: IcvarRmConfig) -> Result<Self> {
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
            order: Vec::with_capacity(ns),
        })
    }

    pub fn config(&self) -> &IcvarRmConfig {
        &self.config
    }

    pub fn log_term(&self) -> f64 {
        self.log_term
    }

    /// Optimistic `Q̄` and `V̄` from the last call to [`Learner::plan`].
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
        let alpha = self.config.alpha;
        for h in (0..horizon).rev() {
            let (q, v, next) = self.tables.step_mut(h);
            ascending_order(next, &mut self.order);
            for s in 0..ns {
                for a in 0..na {
                    let n = self.model.count(s, a);
                    q[s * na + a] = if n == 0 {
                        cap
                    } else {
                        let inv = 1.0 / n as f64;
                        let counts = self.model.next_counts(s, a);
                        let risk =
                            cvar_in_order(&self.order, next, |i| counts[i] as f64 * inv, alpha);
                        let bonus = self.config.bonus(horizon, self.log_term, n as f64);
                        (known.reward(s, a) + risk + bonus).min(cap)
                    };
                }
                let row = &q[s * na..(s + 1) * na];
                let best = argmax(row);
                self.policy.set_action(h, s, best);
                v[s] = row[best];
            }
        }
    }
}

impl Learner for IcvarRm {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{layered_experiment_mdp, treatment_tree};
    use crate::mdp::{Objective, Step};

    fn two_state() -> MdpSpec {
        MdpSpec::new(
            1,
            0,
            Objective::MaximizeReward,
            vec![vec![0.3, 0.6], vec![0.0, 1.0]],
            vec![
                vec![vec![0.5, 0.5], vec![1.0, 0.0]],
                vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            ],
        )
        .unwrap()
    }

    #[test]
    fn first_episode_is_fully_optimistic() {
        let spec = layered_experiment_mdp(3, 4).unwrap();
        let mut rm = IcvarRm::new(&spec, IcvarRmConfig::new(10, 0.1, 0.2).unwrap()).unwrap();
        let policy = rm.plan().unwrap().clone();
        assert_eq!(policy, Policy::constant(3, spec.num_states(), 0));
        for h in 0..3 {
            for s in 0..spec.num_states() {
                assert!(rm.tables().q_row(h, s).iter().all(|&q| q == 3.0));
            }
        }
    }

    #[test]
    fn bonus_is_one_at_the_calibration_count() {
        let config = IcvarRmConfig::new(100, 0.05, 0.25).unwrap();
        let l = config.log_term(4, 3, 2);
        assert!((l - (100.0f64 * 24.0 / 0.01).ln()).abs() < 1e-12);
        let n = l * 16.0 / (0.25 * 0.25);
        assert!((config.bonus(4, l, n) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn optimistic_value_on_hand_fixture() {
        let spec = two_state();
        let config = IcvarRmConfig::new(100_000, 0.5, 0.5).unwrap();
        let mut rm = IcvarRm::new(&spec, config).unwrap();
        let traj = Trajectory {
            episode_index: 0,
            steps: vec![Step {
                state: 0,
                action: 0,
                reward: 0.3,
                next_state: 1,
            }],
        };
        for _ in 0..40_000 {
            rm.observe(&traj).unwrap();
        }
        rm.plan().unwrap();
        let l = (100_000.0f64 * 4.0 / 0.1).ln();
        let expected = 0.3 + 2.0 * (l / 40_000.0).sqrt();
        assert!(expected < 1.0);
        assert!((rm.tables().q(0, 0, 0) - expected).abs() < 1e-12);
        assert_eq!(rm.tables().q(0, 0, 1), 1.0);
    }

    #[test]
    fn budget_and_objective_checks() {
        let spec = two_state();
        let mut rm = IcvarRm::new(&spec, IcvarRmConfig::new(1, 0.5, 0.5).unwrap()).unwrap();
        rm.plan().unwrap();
        rm.observe(&Trajectory {
            episode_index: 0,
            steps: vec![],
        })
        .unwrap();
        assert!(matches!(
            rm.plan(),
            Err(Error::EpisodeBudgetExceeded {
                episode: 2,
                total: 1
            })
        ));
        assert!(matches!(
            IcvarRm::new(&treatment_tree(), IcvarRmConfig::new(1, 0.5, 0.5).unwrap()),
            Err(Error::UnsupportedObjective(_))
        ));
        assert!(IcvarRmConfig::new(0, 0.5, 0.5).is_err());
        assert!(IcvarRmConfig::new(1, 0.0, 0.5).is_err());
        assert!(IcvarRmConfig::new(1, 0.5, 1.5).is_err());
    }
}
