//! Soft Q-learning sweeps converge to soft value iteration; one unit-rate
//! backward sweep is exactly soft value iteration.

use maxent_control::learning::soft_q_learning;
use maxent_control::models::{random_mdp, RandomMdpSpec};
use maxent_control::soft::soft_value_iteration;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> maxent_control::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mdp = random_mdp(&mut rng, RandomMdpSpec::new(4, 3, 4));
    let target = soft_value_iteration(&mdp);
    let init = vec![vec![vec![0.0; 3]; 4]; 4];

    for (rate, sweeps) in [(1.0, 1), (0.5, 5), (0.5, 20), (0.1, 200)] {
        let learned = soft_q_learning(&mdp, &init, rate, sweeps)?;
        let gap = learned
            .q_table
            .iter()
            .flatten()
            .flatten()
            .zip(target.q.iter().flatten().flatten())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        println!("rate {rate:<4} sweeps {sweeps:>4}: max |q - q*| = {gap:.3e}");
    }
    Ok(())
}
