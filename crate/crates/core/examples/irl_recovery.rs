//! Max-ent IRL: fit linear reward weights to demonstrations and compare policies.

use maxent_control::irl::{
    exact_visitation, irl_fit, irl_gradient, maxent_policy, DemoSet, FeatureMap, IrlFitOptions,
    RewardParams,
};
use maxent_control::math::total_variation;
use maxent_control::models::{random_mdp, RandomMdpSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> maxent_control::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mdp = random_mdp(&mut rng, RandomMdpSpec::new(3, 2, 3));
    let features = FeatureMap::one_hot(3, 2);
    let truth = RewardParams {
        weights: (0..features.dim()).map(|_| rng.random_range(-1.0..1.0)).collect(),
    };

    let expert = maxent_policy(&mdp, &features, &truth)?;
    let demos = DemoSet::ExactVisitation(exact_visitation(&mdp, &expert));
    let g = irl_gradient(&mdp, &features, &truth, &demos)?;
    println!("gradient at the true weights: {:.2e}", g.iter().fold(0.0f64, |m, x| m.max(x.abs())));

    let (fitted, report) = irl_fit(&mdp, &features, &demos, IrlFitOptions::default())?;
    let learned = maxent_policy(&mdp, &features, &fitted)?;
    let mut worst = 0.0f64;
    for t in 0..mdp.horizon() {
        for s in 0..mdp.num_states() {
            worst = worst.max(total_variation(learned.row(t, s), expert.row(t, s)));
        }
    }
    println!(
        "{} steps, final |grad| = {:.2e}, max row TV to expert = {:.2e}",
        report.curve.len() - 1,
        report.final_grad_norm,
        worst
    );
    Ok(())
}
