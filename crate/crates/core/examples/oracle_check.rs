//! Backward messages against brute-force trajectory enumeration.

use maxent_control::exact::{backward_messages, message_ratio_policy};
use maxent_control::models::{random_mdp, RandomMdpSpec};
use maxent_control::oracle::{posterior_policy_by_marginalization, posterior_trajectory_distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> maxent_control::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mdp = random_mdp(&mut rng, RandomMdpSpec::new(3, 3, 4));

    let messages = backward_messages(&mdp);
    let policy = message_ratio_policy(&messages);
    let posterior = posterior_trajectory_distribution(&mdp)?;
    let conditionals = posterior_policy_by_marginalization(&mdp)?;

    let mut worst = 0.0f64;
    let mut reachable = 0;
    for (t, step) in conditionals.iter().enumerate() {
        for (s, row) in step.iter().enumerate() {
            let Some(row) = row else { continue };
            reachable += 1;
            for (a, p) in row.iter().enumerate() {
                worst = worst.max((p - policy.pi[t][s][a]).abs());
            }
        }
    }
    println!("trajectories enumerated: {}", posterior.distribution.len());
    println!("reachable (t, s) pairs:  {reachable}");
    println!("max |pi_messages - pi_enumeration| = {worst:.3e}");
    println!(
        "log evidence: messages {:.12}, enumeration {:.12}",
        messages.log_evidence(mdp.initial_dist()),
        posterior.log_evidence
    );
    Ok(())
}
