//! The hard instances: visitation probabilities and the value gap at the
//! bandit state for each construction.

use icvar::instances::{AlphaChainLowerBound, ChainLowerBound, WorstPathLowerBound};
use icvar::mdp::{min_visitation, occupancy, DEFAULT_ENUMERATION_CAP};
use icvar::planner::{evaluate_policy, plan_worst_path, Criterion};
use icvar::{Policy, Result};

fn main() -> Result<()> {
    let mut chain = ChainLowerBound::new(3, 2, 0.2, 0.1, 0.05, 0);
    chain.horizon = Some(10);
    let spec = chain.build()?;
    println!(
        "chain n=3: min visitation {:.4}",
        min_visitation(&spec, DEFAULT_ENUMERATION_CAP)?
    );
    let criterion = Criterion::IteratedCvar { alpha: chain.alpha };
    let bandit = chain.s(chain.n);
    for a in 0..2 {
        let v = evaluate_policy(
            &spec,
            &Policy::constant(10, spec.num_states(), a),
            criterion,
        )?;
        println!(
            "  action {a}: V at s_n {:.3}, V1(s1) {:.3}",
            v.v(chain.n - 1, bandit),
            v.v(0, chain.s(1))
        );
    }

    let alpha_chain = AlphaChainLowerBound {
        n: 4,
        num_actions: 2,
        alpha: 0.2,
        gamma: 0.1,
        eta: 0.05,
        optimal_action: 0,
    };
    let spec = alpha_chain.build()?;
    let h = spec.horizon();
    let occ = occupancy(&spec, &Policy::constant(h, spec.num_states(), 0))?;
    println!(
        "alpha chain n=4: w(s_n) {:.2e}, w(x4) {:.2e}",
        occ.state(h - 2, alpha_chain.s(4)),
        occ.state(h - 1, alpha_chain.x(4))
    );

    for flag in [false, true] {
        let wp = WorstPathLowerBound::new(3, 0.2, 1, flag);
        let spec = wp.build()?;
        let plan = plan_worst_path(&spec);
        let step = wp.n - 1;
        let sn = wp.s(wp.n);
        println!(
            "worst path (s1->x3 edge removed: {flag}): gap at s_n {:.2}, optimal V1 {:.2}",
            plan.tables.q(step, sn, 1) - plan.tables.q(step, sn, 0),
            plan.tables.v(0, wp.s(1))
        );
    }
    Ok(())
}
