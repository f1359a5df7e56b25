//! Discounting as an absorbing state, and the stationary soft solution it allows.

use maxent_control::mdp::apply_discount_transform;
use maxent_control::models::{random_mdp, RandomMdpSpec};
use maxent_control::soft::stationary_soft_value_iteration;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> maxent_control::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mdp = random_mdp(&mut rng, RandomMdpSpec::new(3, 2, 1));

    for gamma in [0.5, 0.9, 0.99] {
        let discounted = apply_discount_transform(&mdp, gamma)?;
        let absorbing = mdp.num_states();
        let sol = stationary_soft_value_iteration(&discounted, &[absorbing], 1e-12, 1_000_000)?;
        println!(
            "gamma {gamma:<5} sweeps {:>5}  V = {:?}",
            sol.iterations,
            sol.v[..absorbing].iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
        );
    }
    Ok(())
}
