mod common;

use common::{flat3, max_abs_diff};
use maxent_control::exact::{backward_messages, optimistic_soft_backup};
use maxent_control::mdp::{
    apply_discount_transform, apply_temperature, trajectory_dynamics_log_prob, validate_mdp,
};
use maxent_control::models::{random_mdp, RandomMdpSpec};
use maxent_control::oracle::{
    maxent_objective_by_decomposition, posterior_trajectory_distribution,
    policy_trajectory_distribution,
};
use maxent_control::policy::Policy;
use maxent_control::soft::{
    elbo, extract_policy, hard_value_iteration, soft_bellman_backup, soft_value_iteration,
    soft_value_iteration_at_temperature,
};
use maxent_control::{TabularMdp, Trajectory};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mdp_from(seed: u64, s: usize, a: usize, t: usize, deterministic: bool) -> TabularMdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = RandomMdpSpec::new(s, a, t);
    random_mdp(&mut rng, if deterministic { spec.deterministic() } else { spec })
}

prop_compose! {
    fn small_mdp(max: usize)(seed in any::<u64>(), s in 1..=max, a in 1..=max, t in 1..=max) -> TabularMdp {
        mdp_from(seed, s, a, t, false)
    }
}

prop_compose! {
    fn deterministic_mdp(max: usize)(seed in any::<u64>(), s in 1..=max, a in 1..=max, t in 1..=max) -> TabularMdp {
        mdp_from(seed, s, a, t, true)
    }
}

/// Random perturbation of a policy: logits `log π + scale·noise`.
fn perturb(policy: &Policy, rng: &mut ChaCha8Rng, scale: f64) -> Policy {
    let logits: Vec<Vec<Vec<f64>>> = policy
        .pi
        .iter()
        .map(|step| {
            step.iter()
                .map(|row| row.iter().map(|p| p.ln() + scale * rng.random_range(-1.0..1.0)).collect())
                .collect()
        })
        .collect();
    Policy::from_logits(&logits)
}

/// Every sequence in `0..base` of length `len`, in odometer order.
fn sequences(base: usize, len: usize) -> Vec<Vec<usize>> {
    (0..base.pow(len as u32))
        .map(|mut k| {
            (0..len)
                .map(|_| {
                    let d = k % base;
                    k /= base;
                    d
                })
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn discount_transform_always_validates(mdp in small_mdp(4), gamma in 0.001f64..0.999) {
        let out = apply_discount_transform(&mdp, gamma).unwrap();
        prop_assert!(validate_mdp(out.description()).is_empty());
        prop_assert_eq!(out.num_states(), mdp.num_states() + 1);
    }

    #[test]
    fn dynamics_probabilities_normalize(seed in any::<u64>(), s in 1usize..=5, a in 1usize..=5, t in 1usize..=5) {
        prop_assume!(s * a <= 5);
        let mdp = mdp_from(seed, s, a, t, false);
        for actions in sequences(a, t) {
            let mass: f64 = sequences(s, t)
                .into_iter()
                .map(|states| {
                    let traj = Trajectory::new(states, actions.clone());
                    trajectory_dynamics_log_prob(&mdp, &traj).unwrap().exp()
                })
                .sum();
            prop_assert!((mass - 1.0).abs() < 1e-10, "actions {:?}: {}", actions, mass);
        }
    }

    #[test]
    fn temperatures_compose(mdp in small_mdp(4), x in 0.05f64..20.0, y in 0.05f64..20.0) {
        let twice = apply_temperature(&apply_temperature(&mdp, x).unwrap(), y).unwrap();
        let once = apply_temperature(&mdp, x * y).unwrap();
        for (p, q) in twice.rewards().iter().flatten().zip(once.rewards().iter().flatten()) {
            prop_assert!((p - q).abs() <= 1e-12 * q.abs().max(1.0));
        }
    }

    #[test]
    fn enumerated_distributions_sum_to_one(mdp in small_mdp(4)) {
        let posterior = posterior_trajectory_distribution(&mdp).unwrap();
        let total: f64 = posterior.distribution.expect(|_| 1.0);
        prop_assert!((total - 1.0).abs() < 1e-10);
        let q = policy_trajectory_distribution(&mdp, &Policy::uniform(mdp.horizon(), mdp.num_states(), mdp.num_actions())).unwrap();
        prop_assert!((q.expect(|_| 1.0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn soft_optimum_beats_perturbations(mdp in small_mdp(4), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let best = extract_policy(&soft_value_iteration(&mdp));
        let j_best = maxent_objective_by_decomposition(&mdp, &best).unwrap();
        let e_best = elbo(&mdp, &best).unwrap();
        prop_assert!((j_best - e_best).abs() < 1e-10);
        for i in 0..100 {
            let other = perturb(&best, &mut rng, 0.05 + i as f64 * 0.02);
            prop_assert!(maxent_objective_by_decomposition(&mdp, &other).unwrap() <= j_best + 1e-12);
            prop_assert!(elbo(&mdp, &other).unwrap() <= e_best + 1e-12);
        }
    }

    #[test]
    fn elbo_is_bounded_by_the_evidence(mdp in small_mdp(3), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let posterior = posterior_trajectory_distribution(&mdp).unwrap();
        let bound = posterior.log_evidence + mdp.horizon() as f64 * (mdp.num_actions() as f64).ln();
        let best = extract_policy(&soft_value_iteration(&mdp));
        prop_assert!(elbo(&mdp, &best).unwrap() <= bound + 1e-9);
        for _ in 0..20 {
            prop_assert!(elbo(&mdp, &perturb(&best, &mut rng, 1.0)).unwrap() <= bound + 1e-9);
        }
    }

    #[test]
    fn elbo_is_tight_for_deterministic_dynamics(mdp in deterministic_mdp(3), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut start = vec![0.0; mdp.num_states()];
        start[rng.random_range(0..mdp.num_states())] = 1.0;
        let mdp = mdp.with_initial_dist(start).unwrap();
        let posterior = posterior_trajectory_distribution(&mdp).unwrap();
        let bound = posterior.log_evidence + mdp.horizon() as f64 * (mdp.num_actions() as f64).ln();
        let best = extract_policy(&soft_value_iteration(&mdp));
        prop_assert!((elbo(&mdp, &best).unwrap() - bound).abs() < 1e-9);
    }

    #[test]
    fn one_hot_dynamics_collapse_the_backups(mdp in deterministic_mdp(4), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..mdp.num_states()).map(|_| rng.random_range(-5.0..5.0)).collect();
        let optimistic = optimistic_soft_backup(&mdp, &v);
        let soft = soft_bellman_backup(&mdp, &v);
        prop_assert!(max_abs_diff(optimistic.iter().flatten(), soft.iter().flatten()) <= 1e-12);
    }

    #[test]
    fn raising_a_reward_never_lowers_log_q(mdp in small_mdp(4), seed in any::<u64>(), bump in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, a) = (rng.random_range(0..mdp.num_states()), rng.random_range(0..mdp.num_actions()));
        let mut reward = mdp.rewards().to_vec();
        reward[s][a] += bump;
        let before = backward_messages(&mdp);
        let after = backward_messages(&mdp.with_reward(reward).unwrap());
        for (x, y) in flat3(&before.log_q).zip(flat3(&after.log_q)) {
            prop_assert!(*y >= x - 1e-12);
        }
    }

    #[test]
    fn cooling_approaches_the_hard_values(mdp in small_mdp(4)) {
        let (_, hard) = hard_value_iteration(&mdp);
        let mut previous = f64::INFINITY;
        for alpha in [1.0, 0.1, 0.01] {
            let (tables, _) = soft_value_iteration_at_temperature(&mdp, alpha).unwrap();
            // the soft max is never below the max, so the gap is one-sided
            let mut gap: f64 = 0.0;
            for (s, h) in tables.v.iter().flatten().zip(hard.iter().flatten()) {
                prop_assert!(*s >= h - 1e-12);
                gap = gap.max(s - h);
            }
            prop_assert!(gap <= previous + 1e-12);
            prop_assert!(gap <= alpha * mdp.horizon() as f64 * (mdp.num_actions() as f64).ln() + 1e-12);
            previous = gap;
        }
    }
}
