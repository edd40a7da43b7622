//! Online learners driven episode by episode by the harness.
//!
//! Every learner knows the reward table and the horizon but not the
//! transition kernel, which it estimates from visit counts. Unvisited
//! `(s, a)` pairs get the most optimistic admissible value.

mod baseline;
mod icvar_bpi;
mod icvar_rm;
mod maxwp;

pub use baseline::{BaselineConfig, HoeffdingBaseline};
pub use icvar_bpi::{Decision, IcvarBpi, IcvarBpiConfig};
pub use icvar_rm::{IcvarRm, IcvarRmConfig};
pub use maxwp::MaxWp;

use crate::error::{Error, Result};
use crate::mdp::{EmpiricalModel, MdpSpec, Objective, Policy, Trajectory};

/// A regret-minimising learner: plan, play, observe, repeat.
pub trait Learner {
    /// Recomputes the estimates and returns the policy for the next episode.
    fn plan(&mut self) -> Result<&Policy>;

    /// Feeds back the trajectory played with the last planned policy.
    fn observe(&mut self, traj: &Trajectory) -> Result<()>;

    /// Number of completed episodes.
    fn episodes(&self) -> usize;

    fn model(&self) -> &EmpiricalModel;
}

/// What a learner may know about the instance.
#[derive(Debug, Clone)]
pub(crate) struct KnownPart {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub initial_state: usize,
    reward: Vec<f64>,
}

impl KnownPart {
    pub fn new(spec: &MdpSpec) -> Result<Self> {
        if spec.objective() != Objective::MaximizeReward {
            return Err(Error::UnsupportedObjective(
                "learners support max_reward instances only".into(),
            ));
        }
        Ok(Self {
            num_states: spec.num_states(),
            num_actions: spec.num_actions(),
            horizon: spec.horizon(),
            initial_state: spec.initial_state(),
            reward: spec.reward_table().to_vec(),
        })
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.num_actions + a]
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1], got {delta}"
        )))
    }
}

pub(crate) fn check_scale(scale: f64) -> Result<()> {
    if scale.is_finite() && scale >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "bonus scale must be finite and >= 0, got {scale}"
        )))
    }
}

/// Lowest-index argmax of `row`.
#[inline]
pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (a, &value) in row.iter().enumerate().skip(1) {
        if value > row[best] {
            best = a;
        }
    }
    best
}
