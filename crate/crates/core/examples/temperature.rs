//! Lowering the temperature hardens the soft max toward ordinary value iteration.

use maxent_control::math::argmax;
use maxent_control::models::{random_mdp, RandomMdpSpec};
use maxent_control::soft::{hard_value_iteration, soft_value_iteration_at_temperature};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> maxent_control::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mdp = random_mdp(&mut rng, RandomMdpSpec::new(4, 3, 5));
    let (_, hard_v) = hard_value_iteration(&mdp);
    let (hard_q, _) = hard_value_iteration(&mdp);

    println!("{:>8} {:>14} {:>12} {:>10}", "alpha", "max |V - V*|", "bound", "argmax ok");
    for alpha in [1.0, 0.3, 0.1, 0.03, 0.01] {
        let (tables, _) = soft_value_iteration_at_temperature(&mdp, alpha)?;
        let gap = tables
            .v
            .iter()
            .flatten()
            .zip(hard_v.iter().flatten())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        // each step adds at most alpha * ln|A| of entropy bonus
        let bound = alpha * mdp.horizon() as f64 * (mdp.num_actions() as f64).ln();
        let same = tables
            .q
            .iter()
            .flatten()
            .zip(hard_q.iter().flatten())
            .all(|(a, b)| argmax(a) == argmax(b));
        println!("{alpha:>8} {gap:>14.6} {bound:>12.6} {same:>10}");
    }
    Ok(())
}
