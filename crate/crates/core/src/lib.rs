//! Risk-sensitive reinforcement learning on tabular episodic MDPs under the
//! Iterated CVaR criterion.
//!
//! The crate contains exact planners ([`planner`]), the CVaR primitives they
//! are built on ([`risk`]), online learners ([`learners`]), hard instances
//! ([`instances`]) and a seeded multi-run experiment driver ([`harness`]).

pub mod error;
pub mod harness;
pub mod instances;
pub mod learners;
pub mod mdp;
pub mod planner;
pub mod risk;

pub use error::{Error, Result};
pub use mdp::{EmpiricalModel, MdpSpec, Objective, Policy, PolicyEnumerator, Trajectory};
pub use planner::{Criterion, PlanResult, ValueTables};
pub use risk::DiscreteDistribution;
