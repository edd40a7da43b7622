//! VaR, lower and upper CVaR, and the tail-conditional weights of a small
//! distribution at a few risk levels.

use icvar::risk::{cvar_lower_tail, cvar_upper_tail, tail_distribution, var, Tail};
use icvar::{DiscreteDistribution, Result};

fn main() -> Result<()> {
    let dist = DiscreteDistribution::new(vec![0.0, 0.4, 1.0, 2.0], vec![0.05, 0.25, 0.5, 0.2])?;
    println!("values {:?}", dist.values());
    println!("probs  {:?}", dist.probs());
    println!("mean   {:.4}\n", dist.mean());
    println!(
        "{:>6} {:>8} {:>10} {:>10}  lower-tail weights",
        "alpha", "VaR", "CVaR low", "CVaR up"
    );
    for alpha in [0.05, 0.1, 0.3, 0.5, 1.0] {
        let beta = tail_distribution(&dist, alpha, Tail::Lower)?.beta;
        let beta: Vec<String> = beta.iter().map(|b| format!("{b:.3}")).collect();
        println!(
            "{alpha:>6} {:>8.3} {:>10.4} {:>10.4}  [{}]",
            var(&dist, alpha)?,
            cvar_lower_tail(&dist, alpha)?,
            cvar_upper_tail(&dist, alpha)?,
            beta.join(", ")
        );
    }
    Ok(())
}
