//! The four-layer treatment tree in cost mode: per-action Iterated CVaR
//! values next to the CVaR of the total cost.

use icvar::instances::treatment_tree;
use icvar::mdp::DEFAULT_ENUMERATION_CAP;
use icvar::planner::{evaluate_total_cvar_fixed_policy, plan, Criterion};
use icvar::{Policy, Result};

fn main() -> Result<()> {
    let spec = treatment_tree();
    let alpha = 0.05;
    let iterated = plan(&spec, Criterion::IteratedCvar { alpha })?;
    let neutral = plan(&spec, Criterion::RiskNeutral)?;
    println!("Iterated CVaR at alpha = {alpha}:");
    for a in 0..2 {
        println!("  Q1(s1, a{}) = {:.4}", a + 1, iterated.tables.q(0, 0, a));
    }
    println!("  chosen action: a{}", iterated.policy.action(0, 0) + 1);
    println!(
        "Expected cost: a1 {:.4}, a2 {:.4}",
        neutral.tables.q(0, 0, 0),
        neutral.tables.q(0, 0, 1)
    );

    println!("\nCVaR of the total cost for each fixed first action:");
    for level in [alpha, alpha.powi(3)] {
        for a in 0..2 {
            let policy = Policy::constant(spec.horizon(), spec.num_states(), a);
            let total =
                evaluate_total_cvar_fixed_policy(&spec, &policy, level, DEFAULT_ENUMERATION_CAP)?;
            println!("  level {level:<9.2e} a{}: {total:.4}", a + 1);
        }
    }
    Ok(())
}
