//! Seeded multi-run experiments with exact regret, aggregation and CSV I/O.
//!
//! Run `r` of an experiment uses the seed `base_seed + r`. Runs execute on the
//! rayon pool and their records are concatenated in run order, so the output
//! does not depend on scheduling.

mod config;
mod experiment;
mod records;

pub use config::{ExperimentConfig, GeneratorSpec, InstanceSource, LearnerKind};
pub use experiment::{
    make_learner, regret_criterion, run_bpi_experiment, run_bpi_on, run_regret_experiment,
    run_regret_on, REGRET_TOLERANCE,
};
pub use records::{
    aggregate, read_aggregate_csv, read_bpi_csv, read_regret_csv, write_aggregate_csv,
    write_bpi_csv, write_regret_csv, Aggregate, AggregateRow, BpiRecord, RegretRecord,
    AGGREGATE_HEADER, BPI_HEADER, REGRET_HEADER,
};
