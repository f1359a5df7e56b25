//! Exact and Monte Carlo max-ent policy gradients, then training to the soft optimum.

use maxent_control::learning::{maxent_policy_gradient, train_policy_gradient, EstimatorKind, PolicyParams};
use maxent_control::math::total_variation;
use maxent_control::models::risk_mdp;
use maxent_control::soft::{extract_policy, soft_value_iteration};

fn main() -> maxent_control::Result<()> {
    let mdp = risk_mdp();
    let params = PolicyParams::zeros(&mdp);

    let exact = maxent_policy_gradient(&mdp, &params, None, EstimatorKind::ExactExpectation, 0, 0)?;
    println!("exact dJ/dtheta at s0: {:?}", exact.wrt_logits[0][0]);
    for n in [100, 10_000] {
        let mc = maxent_policy_gradient(&mdp, &params, None, EstimatorKind::MonteCarlo, n, 42)?;
        let se = mc.std_error.as_ref().expect("monte carlo reports errors");
        println!("n = {n:>6}: {:?} +- {:?}", mc.wrt_logits[0][0], se[0][0]);
    }

    let (trained, curve) =
        train_policy_gradient(&mdp, params, 1.0, 400, EstimatorKind::ExactExpectation, 0, 0)?;
    let target = extract_policy(&soft_value_iteration(&mdp));
    let learned = trained.policy();
    println!(
        "objective {:.6} -> {:.6}, TV to soft optimum at s0 = {:.2e}",
        curve[0].objective,
        curve.last().unwrap().objective,
        total_variation(&learned.pi[0][0], &target.pi[0][0])
    );
    Ok(())
}
