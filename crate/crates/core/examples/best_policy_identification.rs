//! ICVaR-BPI on a one-step bandit: the bounds tighten until the error bound
//! at the start state drops below epsilon.

use icvar::learners::{IcvarBpi, IcvarBpiConfig};
use icvar::mdp::{seeded_rng, simulate_episode, Objective};
use icvar::planner::plan_iterated_cvar;
use icvar::{MdpSpec, Result};

fn main() -> Result<()> {
    let spec = MdpSpec::new(
        2,
        0,
        Objective::MaximizeReward,
        vec![vec![0.6, 0.5], vec![0.1, 0.9]],
        vec![
            vec![vec![0.7, 0.3], vec![0.2, 0.8]],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        ],
    )?;
    let (alpha, epsilon) = (0.5, 0.5);
    let config = IcvarBpiConfig::new(epsilon, 0.1, alpha)?.with_bonus_scale(0.2)?;
    let mut bpi = IcvarBpi::new(&spec, config)?;
    let mut rng = seeded_rng(1);
    let mut k = 0;
    loop {
        let (stop, policy) = {
            let decision = bpi.step();
            (decision.is_stop(), decision.policy().clone())
        };
        if stop || k % 20_000 == 0 {
            println!(
                "episode {:>7}: lower {:.3}  upper {:.3}  error bound {:.3}",
                k + 1,
                bpi.lower().v(0, 0),
                bpi.upper().v(0, 0),
                bpi.error_bound().v(0, 0)
            );
        }
        if stop {
            break;
        }
        bpi.observe(&simulate_episode(&spec, &policy, k, &mut rng)?)?;
        k += 1;
    }
    let optimal = plan_iterated_cvar(&spec, alpha)?;
    println!(
        "returned first action {}, optimal {}",
        bpi.policy().action(0, 0),
        optimal.policy.action(0, 0)
    );
    Ok(())
}
