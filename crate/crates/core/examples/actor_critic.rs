//! Tabular soft actor-critic from zero on a small random MDP.

use maxent_control::learning::{train_actor_critic, CriticParams, PolicyParams};
use maxent_control::math::total_variation;
use maxent_control::models::{random_mdp, RandomMdpSpec};
use maxent_control::policy::state_marginals;
use maxent_control::soft::{extract_policy, soft_value_iteration};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> maxent_control::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mdp = random_mdp(&mut rng, RandomMdpSpec::new(2, 2, 2));
    let init = (PolicyParams::zeros(&mdp), CriticParams::zeros(&mdp));
    let (params, _critic, curve) = train_actor_critic(&mdp, init, 0.1, 0.1, 5000)?;

    for r in curve.iter().step_by(1000) {
        println!(
            "iter {:>5}  J = {:.6}  E(phi) = {:.3e}  E(psi) = {:.3e}",
            r.iteration, r.objective, r.loss_q, r.loss_v
        );
    }
    let target = extract_policy(&soft_value_iteration(&mdp));
    let learned = params.policy();
    // Rows the process never visits get no gradient, so only reachable ones count.
    let mu = state_marginals(&mdp, &learned, mdp.initial_dist());
    let worst = (0..mdp.horizon())
        .flat_map(|t| (0..mdp.num_states()).map(move |s| (t, s)))
        .filter(|&(t, s)| mu[t][s] > 0.0)
        .map(|(t, s)| total_variation(learned.row(t, s), target.row(t, s)))
        .fold(0.0, f64::max);
    println!("max reachable-row TV to the soft optimum: {worst:.2e}");
    Ok(())
}
