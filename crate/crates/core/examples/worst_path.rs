//! MaxWP on the worst-path bandit chain: regret stops growing once the bad
//! transition of the suboptimal action has been observed.

use icvar::harness::{run_regret_on, ExperimentConfig, GeneratorSpec, InstanceSource, LearnerKind};
use icvar::Result;

fn main() -> Result<()> {
    let generator = GeneratorSpec::WorstPath {
        n: 3,
        alpha: 0.2,
        a_star: 1,
        remove_s1_x3_edge: true,
        horizon: None,
    };
    let spec = generator.build()?;
    let mut config =
        ExperimentConfig::new(InstanceSource::Generator(generator), LearnerKind::Maxwp);
    config.episodes = 3000;
    config.runs = 5;
    let records = run_regret_on(&spec, &config)?;
    for run in records.chunks(config.episodes) {
        let last = run
            .iter()
            .rposition(|r| r.instant_regret > 0.0)
            .map_or(0, |i| i + 1);
        println!(
            "run {}: final regret {:.1}, last regretful episode {last}",
            run[0].run_id,
            run.last().unwrap().cumulative_regret
        );
    }
    Ok(())
}
