//! Acceptance gate. Prints one PASS/FAIL line per criterion; exits non-zero
//! if any fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::{central_differences, flat3, max_abs_diff, reachable_row_tv, relative_error, reshape3};
use maxent_control::exact::{backward_messages, message_ratio_policy};
use maxent_control::irl::{
    exact_visitation, irl_fit, irl_gradient, irl_log_likelihood, maxent_policy, DemoSet,
    FeatureMap, IrlFitOptions, RewardParams,
};
use maxent_control::learning::{
    maxent_policy_gradient, soft_q_learning, sql_pg_equivalence_check, sql_pg_gradients,
    train_actor_critic, CriticParams, EstimatorKind, PolicyParams,
};
use maxent_control::math::argmax;
use maxent_control::models::{random_mdp, risk, risk_mdp, RandomMdpSpec};
use maxent_control::oracle::{
    kl_divergence, maxent_objective_by_decomposition, policy_trajectory_distribution,
    posterior_policy_by_marginalization, posterior_trajectory_distribution,
};
use maxent_control::policy::Policy;
use maxent_control::soft::{
    extract_policy, hard_value_iteration, soft_value_iteration, soft_value_iteration_at_temperature,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lib<T>(r: maxent_control::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn random_shape(rng: &mut ChaCha8Rng, max: usize) -> (usize, usize, usize) {
    (rng.random_range(1..=max), rng.random_range(1..=max), rng.random_range(1..=max))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let (mut worst_pi, mut worst_ev) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let (s, a, t) = random_shape(&mut rng, 4);
        let mdp = random_mdp(&mut rng, RandomMdpSpec::new(s, a, t));
        let messages = backward_messages(&mdp);
        let policy = message_ratio_policy(&messages);
        let conditionals = lib(posterior_policy_by_marginalization(&mdp))?;
        for (t, step) in conditionals.iter().enumerate() {
            for (s, row) in step.iter().enumerate() {
                if let Some(row) = row {
                    worst_pi = worst_pi.max(max_abs_diff(row, &policy.pi[t][s]));
                }
            }
        }
        let posterior = lib(posterior_trajectory_distribution(&mdp))?;
        let ev = messages.log_evidence(mdp.initial_dist());
        let rel = (ev - posterior.log_evidence).abs() / posterior.log_evidence.abs().max(1e-300);
        worst_ev = worst_ev.max(rel);
    }
    check(
        worst_pi <= 1e-10 && worst_ev <= 1e-9,
        format!("50 MDPs: policy gap {worst_pi:.1e} (<=1e-10), evidence rel. gap {worst_ev:.1e} (<=1e-9)"),
    )
}

fn deterministic_collapse() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let (mut worst_table, mut worst_kl) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let (s, a, t) = random_shape(&mut rng, 4);
        let mdp = random_mdp(&mut rng, RandomMdpSpec::new(s, a, t).deterministic());
        // Fully deterministic means the start state too: the posterior tilts
        // p(s_0) by exp(V_0), which no policy can reproduce.
        let mut start = vec![0.0; s];
        start[rng.random_range(0..s)] = 1.0;
        let mdp = lib(mdp.with_initial_dist(start))?;
        let messages = backward_messages(&mdp);
        let tables = soft_value_iteration(&mdp);
        worst_table = worst_table
            .max(max_abs_diff(flat3(&messages.log_q), flat3(&tables.q)))
            .max(max_abs_diff(messages.log_v.iter().flatten(), tables.v.iter().flatten()));
        let q_hat = lib(policy_trajectory_distribution(&mdp, &extract_policy(&tables)))?;
        let posterior = lib(posterior_trajectory_distribution(&mdp))?;
        worst_kl = worst_kl.max(lib(kl_divergence(&q_hat, &posterior.distribution))?.abs());
    }
    check(
        worst_table <= 1e-12 && worst_kl < 1e-10,
        format!("20 MDPs: table gap {worst_table:.1e} (<=1e-12), |KL| {worst_kl:.1e} (<1e-10)"),
    )
}

fn risk_contrast() -> Outcome {
    let mdp = risk_mdp();
    let (s0, safe, risky) = (risk::START, risk::SAFE, risk::RISKY);
    let messages = backward_messages(&mdp);
    let exact_q = messages.prior_normalized_q();
    let exact_pi = message_ratio_policy(&messages);
    let tables = soft_value_iteration(&mdp);
    let soft_q = tables.prior_normalized_q();
    let soft_pi = extract_policy(&tables);

    let e = 1f64.exp();
    let expected = [
        ("exact Q(s0,risky)", exact_q[0][s0][risky], (0.5 * 10f64.exp() + 0.5 * (-10f64).exp()).ln()),
        ("exact pi(risky)", exact_pi.pi[0][s0][risky], 0.999_753_241_297_221_6),
        ("variational Q(s0,risky)", soft_q[0][s0][risky], 0.0),
        ("variational Q(s0,safe)", soft_q[0][s0][safe], 1.0),
        ("variational pi(risky)", soft_pi.pi[0][s0][risky], 1.0 / (1.0 + e)),
    ];
    let worst = expected.iter().fold(0.0f64, |m, (_, got, want)| m.max((got - want).abs()));
    let bad: Vec<_> = expected
        .iter()
        .filter(|(_, got, want)| (got - want).abs() > 1e-6)
        .map(|(name, got, want)| format!("{name}={got} want {want}"))
        .collect();
    check(
        bad.is_empty(),
        format!(
            "Q_exact(risky)={:.6} pi_exact={:.6} Q_var(safe,risky)=({:.6},{:.6}) pi_var={:.6}; max err {worst:.1e} {}",
            exact_q[0][s0][risky],
            exact_pi.pi[0][s0][risky],
            soft_q[0][s0][safe],
            soft_q[0][s0][risky],
            soft_pi.pi[0][s0][risky],
            bad.join("; ")
        ),
    )
}

fn gradient_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    let (mut worst_pg, mut worst_irl) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let (s, a, t) = random_shape(&mut rng, 3);
        let mdp = random_mdp(&mut rng, RandomMdpSpec::new(s, a, t));

        let logits: Vec<f64> = (0..t * s * a).map(|_| rng.random_range(-1.5..1.5)).collect();
        let params = PolicyParams { logits: reshape3(&logits, t, s, a) };
        let g = lib(maxent_policy_gradient(&mdp, &params, None, EstimatorKind::ExactExpectation, 0, 0))?;
        let fd = central_differences(&logits, 1e-5, |x| {
            let p = Policy::from_logits(&reshape3(x, t, s, a));
            maxent_objective_by_decomposition(&mdp, &p).expect("valid policy")
        });
        let g: Vec<f64> = flat3(&g.wrt_logits).copied().collect();
        worst_pg = worst_pg.max(relative_error(&g, &fd, 1e-6));

        // dense random features exercise more of the chain rule than one-hot ones
        let features = lib(FeatureMap::new(
            (0..s)
                .map(|_| (0..a).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect())
                .collect(),
        ))?;
        let demo_policy = Policy::from_logits(&params.logits);
        let demos = DemoSet::ExactVisitation(exact_visitation(&mdp, &demo_policy));
        let w: Vec<f64> = (0..features.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = lib(irl_gradient(&mdp, &features, &RewardParams { weights: w.clone() }, &demos))?;
        let fd = central_differences(&w, 1e-5, |x| {
            irl_log_likelihood(&mdp, &features, &RewardParams { weights: x.to_vec() }, &demos)
                .expect("finite likelihood")
        });
        worst_irl = worst_irl.max(relative_error(&g, &fd, 1e-6));
    }
    check(
        worst_pg < 1e-5 && worst_irl < 1e-5,
        format!("20 instances: policy-gradient rel. err {worst_pg:.1e}, IRL rel. err {worst_irl:.1e} (<1e-5)"),
    )
}

fn algorithm_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    let mut worst_sql = 0.0f64;
    for _ in 0..20 {
        let (s, a, t) = random_shape(&mut rng, 4);
        let mdp = random_mdp(&mut rng, RandomMdpSpec::new(s, a, t));
        let init = reshape3(
            &(0..t * s * a).map(|_| rng.random_range(-5.0..5.0)).collect::<Vec<_>>(),
            t,
            s,
            a,
        );
        let learned = lib(soft_q_learning(&mdp, &init, 1.0, 1))?;
        worst_sql = worst_sql.max(max_abs_diff(flat3(&learned.q_table), flat3(&soft_value_iteration(&mdp).q)));
    }

    let mut worst_tv = 0.0f64;
    let mut slowest = 0;
    for _ in 0..10 {
        let mdp = random_mdp(&mut rng, RandomMdpSpec::new(2, 2, 2));
        let target = extract_policy(&soft_value_iteration(&mdp));
        let init = (PolicyParams::zeros(&mdp), CriticParams::zeros(&mdp));
        let (params, _, curve) = lib(train_actor_critic(&mdp, init, 0.1, 0.1, 5000))?;
        worst_tv = worst_tv.max(reachable_row_tv(&mdp, &params.policy(), &target));
        slowest = slowest.max(curve.len());
    }
    check(
        worst_sql <= 1e-12 && worst_tv <= 1e-3,
        format!(
            "soft-Q vs soft VI gap {worst_sql:.1e} (<=1e-12); actor-critic reachable-row TV {worst_tv:.1e} after {slowest} steps (<=1e-3)"
        ),
    )
}

fn pg_sql_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1006);
    let (mut worst, mut weakest_control) = (0.0f64, f64::INFINITY);
    for _ in 0..20 {
        let (s, a, t) = random_shape(&mut rng, 4);
        let a = a.max(2);
        let mdp = random_mdp(&mut rng, RandomMdpSpec::new(s, a, t));
        let critic = CriticParams {
            q_table: reshape3(
                &(0..t * s * a).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<_>>(),
                t,
                s,
                a,
            ),
            v_table: vec![vec![0.0; s]; t],
        };
        worst = worst.max(lib(sql_pg_equivalence_check(&mdp, &critic))?);
        let baseline = vec![vec![1.0; s]; t];
        let control = lib(sql_pg_gradients(&mdp, &critic, Some(&baseline)))?.max_discrepancy();
        weakest_control = weakest_control.min(control);
    }
    check(
        worst < 1e-9 && weakest_control > 1e-3,
        format!("20 MDPs: discrepancy {worst:.1e} (<1e-9); baseline control min {weakest_control:.1e} (>1e-3)"),
    )
}

/// Smallest gap between the best and second-best hard Q-value.
fn min_action_gap(q: &[Vec<Vec<f64>>]) -> f64 {
    q.iter()
        .flatten()
        .map(|row| {
            let best = argmax(row);
            row.iter()
                .enumerate()
                .filter(|&(a, _)| a != best)
                .map(|(_, x)| row[best] - x)
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

fn temperature_limit() -> Outcome {
    let alpha = 0.01;
    let mut rng = ChaCha8Rng::seed_from_u64(1007);
    let (mut checked, mut argmax_checked, mut worst_ratio) = (0, 0, 0.0f64);
    let mut mismatches = 0;
    while checked < 20 {
        let (s, a, t) = random_shape(&mut rng, 4);
        let a = a.max(2);
        let mdp = random_mdp(&mut rng, RandomMdpSpec::new(s, a, t));
        let (hard_q, hard_v) = hard_value_iteration(&mdp);
        let (soft, _) = lib(soft_value_iteration_at_temperature(&mdp, alpha))?;
        let bound = alpha * t as f64 * (a as f64).ln();
        worst_ratio = worst_ratio.max(max_abs_diff(soft.v.iter().flatten(), hard_v.iter().flatten()) / bound);
        checked += 1;
        // A unique optimum with a margin the soft perturbation cannot close.
        if min_action_gap(&hard_q) > bound {
            argmax_checked += 1;
            let same = soft.q.iter().flatten().zip(hard_q.iter().flatten()).all(|(x, y)| argmax(x) == argmax(y));
            mismatches += usize::from(!same);
        }
    }
    check(
        worst_ratio <= 1.0 && mismatches == 0 && argmax_checked > 0,
        format!(
            "20 MDPs: max |V_soft - V_hard| / (alpha T ln|A|) = {worst_ratio:.3}; argmax mismatches {mismatches}/{argmax_checked} unique-optimum MDPs"
        ),
    )
}

fn irl_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1008);
    let (mut worst_tv, mut worst_grad) = (0.0f64, 0.0f64);
    for _ in 0..5 {
        let (s, a, t) = (rng.random_range(2..=3), 2, rng.random_range(2..=3));
        let mdp = random_mdp(&mut rng, RandomMdpSpec::new(s, a, t));
        let features = FeatureMap::one_hot(s, a);
        let truth = RewardParams {
            weights: (0..features.dim()).map(|_| rng.random_range(-1.0..1.0)).collect(),
        };
        let expert = lib(maxent_policy(&mdp, &features, &truth))?;
        let demos = DemoSet::ExactVisitation(exact_visitation(&mdp, &expert));
        let g = lib(irl_gradient(&mdp, &features, &truth, &demos))?;
        worst_grad = worst_grad.max(g.iter().fold(0.0, |m: f64, x| m.max(x.abs())));
        let (fitted, _) = lib(irl_fit(&mdp, &features, &demos, IrlFitOptions { iters: 3000, ..IrlFitOptions::default() }))?;
        let learned = lib(maxent_policy(&mdp, &features, &fitted))?;
        worst_tv = worst_tv.max(reachable_row_tv(&mdp, &learned, &expert));
    }
    check(
        worst_tv <= 1e-3 && worst_grad < 1e-10,
        format!("5 MDPs: reachable-row TV {worst_tv:.1e} (<=1e-3); |grad| at truth {worst_grad:.1e} (<1e-10)"),
    )
}

fn softctl(args: &[&str], threads: &str) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_softctl"))
        .args(args)
        .env("SOFTCTL_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("softctl {args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn reproducibility() -> Outcome {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = |name: &str| data.join(name).display().to_string();
    let o = |name: &str| dir.path().join(name).display().to_string();
    let (risk, corridor) = (d("risk.json"), d("corridor.json"));
    let runs: Vec<(Vec<String>, Vec<String>)> = vec![
        (vec!["solve-exact".into(), "--mdp".into(), risk.clone(), "--out".into(), o("exact.json")], vec![o("exact.json")]),
        (vec!["solve-soft".into(), "--mdp".into(), corridor.clone(), "--temperature".into(), "0.5".into(), "--out".into(), o("soft.json")], vec![o("soft.json")]),
        (vec!["solve-soft".into(), "--mdp".into(), corridor.clone(), "--discount".into(), "0.9".into(), "--stationary".into(), "--out".into(), o("stat.json")], vec![o("stat.json")]),
        (vec!["compare-risk".into(), "--mdp".into(), risk.clone(), "--out".into(), o("risk.csv")], vec![o("risk.csv")]),
        (vec!["oracle-dump".into(), "--mdp".into(), corridor.clone(), "--out".into(), o("dump.csv")], vec![o("dump.csv")]),
        (vec!["pg".into(), "--mdp".into(), corridor.clone(), "--rate".into(), "0.5".into(), "--iters".into(), "20".into(), "--samples".into(), "5000".into(), "--seed".into(), "17".into(), "--out".into(), o("pg.json")], vec![o("pg.json"), o("pg.curve.csv")]),
        (vec!["actor-critic".into(), "--mdp".into(), corridor.clone(), "--iters".into(), "200".into(), "--out".into(), o("ac.json")], vec![o("ac.json"), o("ac.curve.csv")]),
        (vec!["soft-q".into(), "--mdp".into(), corridor.clone(), "--rate".into(), "0.5".into(), "--sweeps".into(), "10".into(), "--out".into(), o("sq.json")], vec![o("sq.json"), o("sq.curve.csv")]),
        (vec!["irl".into(), "--mdp".into(), corridor.clone(), "--features".into(), d("corridor_features.json"), "--demos".into(), d("corridor_demos.json"), "--iters".into(), "50".into(), "--l2".into(), "0.1".into(), "--out".into(), o("irl.json")], vec![o("irl.json"), o("irl.curve.csv")]),
        (vec!["pg".into(), "--config".into(), d("pg_corridor.config.json")], vec![d("pg_corridor.out.json"), d("pg_corridor.out.curve.csv")]),
    ];
    let mut files = 0;
    for (args, outputs) in &runs {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        softctl(&args, "1")?;
        let first: Vec<Vec<u8>> = outputs.iter().map(|p| std::fs::read(p).map_err(|e| format!("{p}: {e}"))).collect::<Result<_, _>>()?;
        for p in outputs {
            std::fs::remove_file(p).map_err(|e| e.to_string())?;
        }
        softctl(&args, "4")?;
        for (p, bytes) in outputs.iter().zip(&first) {
            let again = std::fs::read(p).map_err(|e| format!("{p}: {e}"))?;
            if &again != bytes {
                return Err(format!("{} differs between runs", p));
            }
            files += 1;
        }
        if args.contains(&"--config") {
            for p in outputs {
                let _ = std::fs::remove_file(p);
            }
        }
    }
    Ok(format!("{} runs, {files} files byte-identical across reruns (1 vs 4 threads)", runs.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 oracle equivalence", oracle_equivalence),
        ("2 deterministic collapse", deterministic_collapse),
        ("3 risk MDP contrast", risk_contrast),
        ("4 gradient checks", gradient_checks),
        ("5 algorithm agreement", algorithm_agreement),
        ("6 PG/SQL equivalence", pg_sql_equivalence),
        ("7 temperature limit", temperature_limit),
        ("8 IRL recovery", irl_recovery),
        ("9 reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name:<26} {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name:<26} {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
