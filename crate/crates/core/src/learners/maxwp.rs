//! Worst Path learning by support discovery.
//!
//! `Q̂(s, a)` takes the minimum of `V̂_{h+1}` over the successors observed so
//! far, so estimates can only fall as new successors show up. No confidence
//! term is needed: the failure probability enters only the analysis.

use super::{argmax, KnownPart, Learner};
use crate::error::Result;
use crate::mdp::{EmpiricalModel, MdpSpec, Policy, Trajectory};
use crate::planner::ValueTables;

#[derive(Debug, Clone)]
pub struct MaxWp {
    known: KnownPart,
    model: EmpiricalModel,
    episodes: usize,
    tables: ValueTables,
    policy: Policy,
    next: Vec<f64>,
}

impl MaxWp {
    pub fn new(spec: &MdpSpec) -> Result<Self> {
        let known = KnownPart::new(spec)?;
        let (ns, na, horizon) = (known.num_states, known.num_actions, known.horizon);
        Ok(Self {
            known,
            model: EmpiricalModel::for_spec(spec),
            episodes: 0,
            tables: ValueTables::zeros(horizon, ns, na),
            policy: Policy::constant(horizon, ns, 0),
            next: vec![0.0; ns],
        })
    }

    /// `Q̂` and `V̂` from the last call to [`Learner::plan`].
    pub fn tables(&self) -> &ValueTables {
        &self.tables
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    fn recompute(&mut self) {
        let known = &self.known;
        let (ns, na, horizon) = (known.num_states, known.num_actions, known.horizon);
        for h in (0..horizon).rev() {
            self.next.copy_from_slice(self.tables.v_step(h + 1));
            let unexplored = self.next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for s in 0..ns {
                for a in 0..na {
                    let counts = self.model.next_counts(s, a);
                    let observed = counts
                        .iter()
                        .zip(&self.next)
                        .filter(|(c, _)| **c > 0)
                        .map(|(_, v)| *v)
                        .fold(f64::INFINITY, f64::min);
                    let worst = if observed.is_finite() {
                        observed
                    } else {
                        unexplored
                    };
                    self.tables.set_q(h, s, a, known.reward(s, a) + worst);
                }
                let best = argmax(self.tables.q_row(h, s));
                self.policy.set_action(h, s, best);
                self.tables.set_v(h, s, self.tables.q(h, s, best));
            }
        }
    }
}

impl Learner for MaxWp {
    fn plan(&mut self) -> Result<&Policy> {
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
