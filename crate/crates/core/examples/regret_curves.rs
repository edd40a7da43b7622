//! Cumulative Iterated CVaR regret of ICVaR-RM and the risk-neutral
//! baseline on the layered MDP, aggregated over runs.
//!
//! Pass an output directory to also write the per-episode aggregate CSVs.

use std::fs::File;

use icvar::harness::{
    aggregate, run_regret_on, write_aggregate_csv, ExperimentConfig, GeneratorSpec, InstanceSource,
    LearnerKind,
};
use icvar::Result;

fn main() -> Result<()> {
    let out_dir = std::env::args().nth(1);
    let generator = GeneratorSpec::Layered {
        horizon: 3,
        num_actions: 3,
    };
    let spec = generator.build()?;
    for learner in [LearnerKind::IcvarRm, LearnerKind::Baseline] {
        let mut config =
            ExperimentConfig::new(InstanceSource::Generator(generator.clone()), learner);
        config.alpha = Some(0.05);
        config.delta = Some(0.005);
        config.episodes = 2000;
        config.runs = 8;
        config.bonus_scale = 0.02;
        let agg = aggregate(&run_regret_on(&spec, &config)?);
        println!("{}:", learner.name());
        for row in agg.rows.iter().filter(|r| r.episode % 500 == 0) {
            println!(
                "  k={:>5}  R={:>8.2} +- {:.2}",
                row.episode, row.mean_cum_regret, row.ci95_half_width
            );
        }
        if let Some(dir) = &out_dir {
            let path = std::path::Path::new(dir).join(format!("{}.csv", learner.name()));
            write_aggregate_csv(&agg.rows, File::create(&path)?)?;
            println!("  wrote {}", path.display());
        }
    }
    Ok(())
}
