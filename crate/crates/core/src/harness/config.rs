use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{
    layered_experiment_mdp, random_mdp, regret_lb_alpha, treatment_tree, ChainLowerBound,
    WorstPathLowerBound,
};
use crate::mdp::MdpSpec;

/// A named instance generator with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Layered {
        #[serde(rename = "H")]
        horizon: usize,
        #[serde(rename = "A")]
        num_actions: usize,
    },
    Chain {
        n: usize,
        #[serde(rename = "A")]
        num_actions: usize,
        mu: f64,
        alpha: f64,
        eta: f64,
        j_star: usize,
        #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
        horizon: Option<usize>,
        #[serde(default)]
        remove_s1_x3_edge: bool,
    },
    AlphaChain {
        n: usize,
        #[serde(rename = "A")]
        num_actions: usize,
        alpha: f64,
        gamma: f64,
        eta: f64,
        j_star: usize,
    },
    WorstPath {
        n: usize,
        alpha: f64,
        a_star: usize,
        #[serde(default)]
        remove_s1_x3_edge: bool,
        #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
        horizon: Option<usize>,
    },
    TreatmentTree,
    Random {
        #[serde(rename = "S")]
        num_states: usize,
        #[serde(rename = "A")]
        num_actions: usize,
        #[serde(rename = "H")]
        horizon: usize,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_prob: Option<f64>,
    },
}

impl GeneratorSpec {
    pub fn build(&self) -> Result<MdpSpec> {
        match *self {
            GeneratorSpec::Layered {
                horizon,
                num_actions,
            } => layered_experiment_mdp(horizon, num_actions),
            GeneratorSpec::Chain {
                n,
                num_actions,
                mu,
                alpha,
                eta,
                j_star,
                horizon,
                remove_s1_x3_edge,
            } => {
                let mut p = ChainLowerBound::new(n, num_actions, mu, alpha, eta, j_star);
                p.horizon = horizon;
                p.remove_s1_x3_edge = remove_s1_x3_edge;
                p.build()
            }
            GeneratorSpec::AlphaChain {
                n,
                num_actions,
                alpha,
                gamma,
                eta,
                j_star,
            } => regret_lb_alpha(n, num_actions, alpha, gamma, eta, j_star),
            GeneratorSpec::WorstPath {
                n,
                alpha,
                a_star,
                remove_s1_x3_edge,
                horizon,
            } => {
                let mut p = WorstPathLowerBound::new(n, alpha, a_star, remove_s1_x3_edge);
                p.horizon = horizon;
                p.build()
            }
            GeneratorSpec::TreatmentTree => Ok(treatment_tree()),
            GeneratorSpec::Random {
                num_states,
                num_actions,
                horizon,
                seed,
                min_prob,
            } => random_mdp(num_states, num_actions, horizon, seed, min_prob),
        }
    }
}

/// Where the instance comes from: a generator or a spec JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSource {
    Path { path: PathBuf },
    Generator(GeneratorSpec),
}

impl InstanceSource {
    pub fn load(&self) -> Result<MdpSpec> {
        match self {
            InstanceSource::Path { path } => MdpSpec::from_json(&std::fs::read_to_string(path)?),
            InstanceSource::Generator(g) => g.build(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    IcvarRm,
    IcvarBpi,
    Maxwp,
    Baseline,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::IcvarRm => "icvar_rm",
            LearnerKind::IcvarBpi => "icvar_bpi",
            LearnerKind::Maxwp => "maxwp",
            LearnerKind::Baseline => "baseline",
        }
    }
}

fn default_runs() -> usize {
    1
}

fn default_scale() -> f64 {
    1.0
}

/// One experiment: an instance, a learner and the run protocol.
///
/// `alpha` is needed by every learner except `maxwp` (it also sets the
/// regret criterion for `baseline`), `delta` by `icvar_rm`, `icvar_bpi` and
/// `baseline`, `epsilon` by `icvar_bpi` only. `delta` is accepted but unused
/// for `maxwp`. `max_episodes` caps a best-policy-identification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSource,
    pub learner: LearnerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub episodes: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default = "default_scale")]
    pub bonus_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_episodes: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(instance: InstanceSource, learner: LearnerKind) -> Self {
        Self {
            instance,
            learner,
            alpha: None,
            delta: None,
            epsilon: None,
            episodes: 0,
            runs: 1,
            base_seed: 0,
            output: None,
            bonus_scale: 1.0,
            max_episodes: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        let needs = |field: &str, value: Option<f64>| {
            value
                .map(|_| ())
                .ok_or_else(|| Error::Config(format!("{} requires `{field}`", self.learner.name())))
        };
        match self.learner {
            LearnerKind::IcvarRm | LearnerKind::Baseline => {
                needs("alpha", self.alpha)?;
                needs("delta", self.delta)?;
            }
            LearnerKind::IcvarBpi => {
                needs("alpha", self.alpha)?;
                needs("delta", self.delta)?;
                needs("epsilon", self.epsilon)?;
            }
            LearnerKind::Maxwp => {}
        }
        Ok(())
    }

    /// Seed of run `run_id`.
    pub fn seed(&self, run_id: usize) -> u64 {
        self.base_seed.wrapping_add(run_id as u64)
    }

    pub(crate) fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(1.0)
    }

    pub(crate) fn delta(&self) -> f64 {
        self.delta.unwrap_or(1.0)
    }
}
