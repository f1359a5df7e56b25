//! Soft Q-learning's gradient equals policy gradient plus a value-function
//! Bellman term, for the policy implied by the Q table.

use maxent_control::learning::{sql_pg_equivalence_check, sql_pg_gradients, CriticParams};
use maxent_control::models::{random_mdp, RandomMdpSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> maxent_control::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mdp = random_mdp(&mut rng, RandomMdpSpec::new(3, 3, 3));
    let q_table = (0..3)
        .map(|_| (0..3).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect())
        .collect();
    let critic = CriticParams {
        q_table,
        v_table: vec![vec![0.0; 3]; 3],
    };

    println!("zero baseline:      {:.3e}", sql_pg_equivalence_check(&mdp, &critic)?);
    let baseline = vec![vec![1.0; 3]; 3];
    let skewed = sql_pg_gradients(&mdp, &critic, Some(&baseline))?;
    println!("baseline on SQL only: {:.3e}", skewed.max_discrepancy());
    Ok(())
}
