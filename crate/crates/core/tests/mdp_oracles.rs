mod common;

use common::{enumerate_paths, min_visitation_by_paths};
use icvar::instances::{
    layered_experiment_mdp, random_mdp, regret_lb_alpha, AlphaChainLowerBound, ChainLowerBound,
    WorstPathLowerBound,
};
use icvar::mdp::{
    min_visitation, occupancy, reach_probability, seeded_rng, simulate_episode, EmpiricalModel,
    Policy, PolicyEnumerator, DEFAULT_ENUMERATION_CAP,
};
use icvar::planner::{evaluate_policy, evaluate_policy_iterated_cvar, Criterion};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn occupancy_matches_path_enumeration(seed in any::<u64>(), pick in any::<u64>()) {
        let spec = random_mdp(4, 2, 3, seed, None).unwrap();
        let policy = PolicyEnumerator::for_spec(&spec).nth((pick % spec.policy_count() as u64) as usize).unwrap();
        let occ = occupancy(&spec, &policy).unwrap();
        let mut expected = vec![0.0; 3 * 4];
        for (states, p, _) in enumerate_paths(&spec, &policy) {
            for (h, s) in states.iter().enumerate() {
                expected[h * 4 + s] += p;
            }
        }
        for h in 0..3 {
            prop_assert!((occ.step_states(h).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for s in 0..4 {
                prop_assert!((occ.state(h, s) - expected[h * 4 + s]).abs() < 1e-12);
                for a in 0..2 {
                    let w = if policy.action(h, s) == a { occ.state(h, s) } else { 0.0 };
                    prop_assert_eq!(occ.state_action(h, s, a), w);
                }
            }
        }
    }

    #[test]
    fn reach_probability_matches_path_enumeration(seed in any::<u64>(), target_s in 0usize..3, target_a in 0usize..2) {
        let spec = random_mdp(3, 2, 3, seed, Some(0.15)).unwrap();
        let policy = PolicyEnumerator::for_spec(&spec).nth((seed % 64) as usize).unwrap();
        let expected: f64 = enumerate_paths(&spec, &policy)
            .iter()
            .filter(|(states, _, _)| states.iter().enumerate().any(|(h, &s)| s == target_s && policy.action(h, s) == target_a))
            .map(|(_, p, _)| p)
            .sum();
        let got = reach_probability(&spec, &policy, (target_s, target_a)).unwrap();
        prop_assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn min_visitation_matches_policy_enumeration(seed in any::<u64>()) {
        let spec = random_mdp(3, 2, 2, seed, Some(0.1)).unwrap();
        let fast = min_visitation(&spec, DEFAULT_ENUMERATION_CAP).unwrap();
        prop_assert!((fast - min_visitation_by_paths(&spec)).abs() < 1e-12);
    }

    #[test]
    fn counts_are_conserved(seed in any::<u64>(), episodes in 1usize..20) {
        let spec = random_mdp(4, 3, 4, seed, None).unwrap();
        let policy = PolicyEnumerator::for_spec(&spec).nth((seed % 1000) as usize).unwrap();
        let mut model = EmpiricalModel::for_spec(&spec);
        let mut rng = seeded_rng(seed);
        for k in 0..episodes {
            model.update(&simulate_episode(&spec, &policy, k, &mut rng).unwrap()).unwrap();
        }
        prop_assert_eq!(model.total_count(), (episodes * 4) as u64);
        for s in 0..4 {
            for a in 0..3 {
                prop_assert_eq!(model.count(s, a), model.next_counts(s, a).iter().sum::<u64>());
            }
        }
    }
}

#[test]
fn chain_min_visitation_is_mu_to_the_n_minus_one() {
    let spec = ChainLowerBound::new(3, 2, 0.2, 0.1, 0.05, 0)
        .build()
        .unwrap();
    let w = min_visitation(&spec, DEFAULT_ENUMERATION_CAP).unwrap();
    assert!((w - 0.04).abs() < 1e-15, "{w}");
    let occ = occupancy(
        &spec,
        &Policy::constant(spec.horizon(), spec.num_states(), 0),
    )
    .unwrap();
    assert!((occ.state(2, 2) - 0.04).abs() < 1e-15);
}

#[test]
fn alpha_chain_occupancies() {
    let p = AlphaChainLowerBound {
        n: 4,
        num_actions: 2,
        alpha: 0.2,
        gamma: 0.1,
        eta: 0.05,
        optimal_action: 1,
    };
    let spec = regret_lb_alpha(4, 2, 0.2, 0.1, 0.05, 1).unwrap();
    let h = spec.horizon();
    let occ = occupancy(&spec, &Policy::constant(h, spec.num_states(), 0)).unwrap();
    // x4 is entered at the last step, s_n one step earlier
    assert!((occ.state(h - 1, p.x(4)) - 0.1f64.powi(h as i32 - 1)).abs() < 1e-15);
    assert!((occ.state(h - 2, p.s(4)) - 0.2f64.powi(h as i32 - 2)).abs() < 1e-15);
}

#[test]
fn worst_path_bandit_reach_is_alpha_to_the_n_minus_one() {
    for n in 2..=4 {
        let p = WorstPathLowerBound::new(n, 0.2, 1, true);
        let spec = p.build().unwrap();
        let policy = Policy::constant(spec.horizon(), spec.num_states(), p.suboptimal_action());
        let reach = reach_probability(&spec, &policy, (p.s(n), p.suboptimal_action())).unwrap();
        assert!((reach - 0.2f64.powi(n as i32 - 1)).abs() < 1e-15);
    }
}

#[test]
fn worst_path_bandit_gap_without_the_flag() {
    // a_sub worst path: s1 .. s_n -> x3 at step n + 1, worth 0.2 (H - n).
    // a_star worst path: the direct s1 -> x3 edge, worth 0.2 (H - 1).
    let p = WorstPathLowerBound::new(3, 0.2, 1, false);
    let spec = p.build().unwrap();
    let h = spec.horizon();
    let hf = h as f64;
    let value = |a: usize, criterion| {
        let mut policy = Policy::constant(h, spec.num_states(), 0);
        for step in 0..h {
            policy.set_action(step, p.s(3), a);
        }
        evaluate_policy(&spec, &policy, criterion)
            .unwrap()
            .v(0, p.s(1))
    };
    for criterion in [Criterion::WorstPath, Criterion::IteratedCvar { alpha: 0.2 }] {
        assert!((value(1, criterion) - 0.2 * (hf - 1.0)).abs() < 1e-12);
        assert!((value(0, criterion) - 0.2 * (hf - 3.0)).abs() < 1e-12);
    }
}

#[test]
fn chain_values_by_hand() {
    // H = 10, n = 2: s_2 is the bandit state, entered at the second step
    let mut p = ChainLowerBound::new(2, 2, 0.2, 0.1, 0.05, 0);
    p.horizon = Some(10);
    let spec = p.build().unwrap();
    let optimal = Policy::constant(10, spec.num_states(), 0);
    let other = Policy::constant(10, spec.num_states(), 1);
    let v_opt = evaluate_policy_iterated_cvar(&spec, &optimal, 0.1).unwrap();
    let v_sub = evaluate_policy_iterated_cvar(&spec, &other, 0.1).unwrap();
    // bandit state: half the tail on x3 (0.2 * 8), half on x2 (0.8 * 8)
    assert!((v_opt.v(1, p.s(2)) - 4.0).abs() < 1e-12);
    assert!((v_sub.v(1, p.s(2)) - 1.6).abs() < 1e-12);
    // s1 keeps the direct 0.2-mass edge to x3, worth 0.2 * 9 = 1.8
    assert!((v_opt.v(0, p.s(1)) - 1.8).abs() < 1e-12);
    assert!((v_sub.v(0, p.s(1)) - 1.6).abs() < 1e-12);

    p.remove_s1_x3_edge = true;
    let spec = p.build().unwrap();
    let v_opt = evaluate_policy_iterated_cvar(&spec, &optimal, 0.1).unwrap();
    assert!((v_opt.v(0, p.s(1)) - 4.0).abs() < 1e-12);
}

#[test]
fn layered_risky_action_sampling_frequency() {
    let spec = layered_experiment_mdp(2, 3).unwrap();
    let policy = Policy::constant(2, spec.num_states(), 2);
    let row = spec.transition_row(0, 2).to_vec();
    let targets: Vec<usize> = (0..spec.num_states()).filter(|&s| row[s] > 0.0).collect();
    assert_eq!(targets.len(), 2);
    let mut rng = seeded_rng(2024);
    let draws = 100_000;
    let mut hits = [0usize; 2];
    for k in 0..draws {
        let traj = simulate_episode(&spec, &policy, k, &mut rng).unwrap();
        let next = traj.steps[0].next_state;
        hits[targets.iter().position(|&t| t == next).unwrap()] += 1;
    }
    let freq = [hits[0] as f64 / draws as f64, hits[1] as f64 / draws as f64];
    assert!((freq[0] - 0.001).abs() <= 0.003, "{freq:?}");
    assert!((freq[1] - 0.999).abs() <= 0.003, "{freq:?}");
}

#[test]
fn simulation_is_reproducible() {
    let spec = random_mdp(5, 3, 6, 3, None).unwrap();
    let policy = Policy::constant(6, 5, 1);
    let run = |seed| {
        let mut rng = seeded_rng(seed);
        (0..50)
            .map(|k| simulate_episode(&spec, &policy, k, &mut rng).unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(run(11), run(11));
    assert_ne!(run(11), run(12));
}
