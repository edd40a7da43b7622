use rayon::prelude::*;

use super::config::{ExperimentConfig, LearnerKind};
use super::records::{BpiRecord, RegretRecord};
use crate::error::{Error, Result};
use crate::learners::{
    BaselineConfig, HoeffdingBaseline, IcvarBpi, IcvarBpiConfig, IcvarRm, IcvarRmConfig, Learner,
    MaxWp,
};
use crate::mdp::{seeded_rng, simulate_episode_into, MdpSpec, Policy, Trajectory};
use crate::planner::{evaluate_policy, plan, Criterion};

/// Regret below zero by less than this is rounding and is reported as 0.
pub const REGRET_TOLERANCE: f64 = 1e-9;

/// Criterion under which a learner's regret is measured.
pub fn regret_criterion(config: &ExperimentConfig) -> Criterion {
    match config.learner {
        LearnerKind::Maxwp => Criterion::WorstPath,
        _ => Criterion::IteratedCvar {
            alpha: config.alpha(),
        },
    }
}

/// Builds a fresh regret learner for `spec`.
pub fn make_learner(spec: &MdpSpec, config: &ExperimentConfig) -> Result<Box<dyn Learner + Send>> {
    config.validate()?;
    let k = config.episodes.max(1);
    Ok(match config.learner {
        LearnerKind::IcvarRm => {
            let c = IcvarRmConfig::new(k, config.delta(), config.alpha())?
                .with_bonus_scale(config.bonus_scale)?;
            Box::new(IcvarRm::new(spec, c)?)
        }
        LearnerKind::Baseline => {
            let c = BaselineConfig::new(k, config.delta())?.with_bonus_scale(config.bonus_scale)?;
            Box::new(HoeffdingBaseline::new(spec, c)?)
        }
        LearnerKind::Maxwp => Box::new(MaxWp::new(spec)?),
        LearnerKind::IcvarBpi => {
            return Err(Error::Config(
                "icvar_bpi is a best-policy-identification learner; use run_bpi_experiment".into(),
            ))
        }
    })
}

/// Loads the instance and runs every seeded run of a regret experiment.
pub fn run_regret_experiment(config: &ExperimentConfig) -> Result<Vec<RegretRecord>> {
    let spec = config.instance.load()?;
    run_regret_on(&spec, config)
}

/// Runs all runs on `spec` in parallel; records come out ordered by run,
/// then episode.
pub fn run_regret_on(spec: &MdpSpec, config: &ExperimentConfig) -> Result<Vec<RegretRecord>> {
    config.validate()?;
    let criterion = regret_criterion(config);
    let optimal = plan(spec, criterion)?.tables.v(0, spec.initial_state());
    // fail fast on learner/instance mismatch even when K = 0
    make_learner(spec, config)?;
    let runs: Vec<Vec<RegretRecord>> = (0..config.runs)
        .into_par_iter()
        .map(|run_id| regret_run(spec, config, criterion, optimal, run_id))
        .collect::<Result<_>>()?;
    Ok(runs.into_iter().flatten().collect())
}

fn regret_run(
    spec: &MdpSpec,
    config: &ExperimentConfig,
    criterion: Criterion,
    optimal: f64,
    run_id: usize,
) -> Result<Vec<RegretRecord>> {
    let mut learner = make_learner(spec, config)?;
    let mut rng = seeded_rng(config.seed(run_id));
    let mut traj = Trajectory::default();
    let mut records = Vec::with_capacity(config.episodes);
    let mut cached: Option<(Policy, f64)> = None;
    let mut cumulative = 0.0;
    for episode in 1..=config.episodes {
        let policy = learner.plan()?;
        let value = match &cached {
            Some((p, v)) if p == policy => *v,
            _ => {
                let v = evaluate_policy(spec, policy, criterion)?.v(0, spec.initial_state());
                cached = Some((policy.clone(), v));
                v
            }
        };
        let mut instant = optimal - value;
        if instant < 0.0 && instant > -REGRET_TOLERANCE {
            instant = 0.0;
        }
        cumulative += instant;
        records.push(RegretRecord {
            run_id,
            episode,
            instant_regret: instant,
            cumulative_regret: cumulative,
        });
        simulate_episode_into(spec, policy, episode - 1, &mut rng, &mut traj)?;
        learner.observe(&traj)?;
    }
    Ok(records)
}

/// Loads the instance and runs every seeded run of a best-policy
/// identification experiment.
pub fn run_bpi_experiment(config: &ExperimentConfig) -> Result<Vec<BpiRecord>> {
    let spec = config.instance.load()?;
    run_bpi_on(&spec, config)
}

pub fn run_bpi_on(spec: &MdpSpec, config: &ExperimentConfig) -> Result<Vec<BpiRecord>> {
    config.validate()?;
    if config.learner != LearnerKind::IcvarBpi {
        return Err(Error::Config(format!(
            "{} is not a best-policy-identification learner",
            config.learner.name()
        )));
    }
    let bpi_config = IcvarBpiConfig::new(
        config.epsilon.unwrap_or(0.0),
        config.delta(),
        config.alpha(),
    )?
    .with_bonus_scale(config.bonus_scale)?;
    let alpha = config.alpha();
    let optimal = plan(spec, Criterion::IteratedCvar { alpha })?
        .tables
        .v(0, spec.initial_state());
    IcvarBpi::new(spec, bpi_config)?;
    (0..config.runs)
        .into_par_iter()
        .map(|run_id| bpi_run(spec, config, bpi_config, optimal, run_id))
        .collect()
}

fn bpi_run(
    spec: &MdpSpec,
    config: &ExperimentConfig,
    bpi_config: IcvarBpiConfig,
    optimal: f64,
    run_id: usize,
) -> Result<BpiRecord> {
    let mut learner = IcvarBpi::new(spec, bpi_config)?;
    let mut rng = seeded_rng(config.seed(run_id));
    let mut traj = Trajectory::default();
    let mut episode = 1;
    loop {
        let decision = learner.step();
        if decision.is_stop() {
            let policy = decision.policy().clone();
            let value = evaluate_policy(
                spec,
                &policy,
                Criterion::IteratedCvar {
                    alpha: bpi_config.alpha,
                },
            )?;
            let gap = optimal - value.v(0, spec.initial_state());
            return Ok(BpiRecord {
                run_id,
                stop_episode: episode,
                policy,
                gap,
                success: gap <= bpi_config.epsilon,
            });
        }
        if let Some(cap) = config.max_episodes {
            if episode > cap {
                return Err(Error::EpisodeCapExceeded { run_id, cap });
            }
        }
        simulate_episode_into(spec, decision.policy(), episode - 1, &mut rng, &mut traj)?;
        learner.observe(&traj)?;
        episode += 1;
    }
}
