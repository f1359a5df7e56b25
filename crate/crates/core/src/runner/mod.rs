//! One experiment per call: load inputs, run a task, write stamped artifacts.
//!
//! Numbers are written with 17 significant digits and files are renamed into
//! place only once every artifact of the run has been staged, so a failed run
//! leaves nothing behind and identical configs give byte-identical files.

mod config;
mod output;

use std::path::PathBuf;

use serde::Serialize;

pub use config::{
    ActorCriticParams, ExperimentConfig, IrlParams, NoParams, PgParams, SoftQParams,
    SolveSoftParams, TaskKind, TaskParams,
};
pub use output::{curve_path, fmt_f64, to_json_bytes, write_atomically, Meta, TOOLKIT, VERSION};

use crate::error::{Error, Result};
use crate::exact::{backward_messages, message_ratio_policy};
use crate::irl::{irl_fit, irl_log_likelihood, maxent_policy, DemoSet, FeatureMap, IrlFitOptions};
use crate::learning::{
    soft_q_learning, soft_q_target, train_actor_critic, train_policy_gradient, CriticParams,
    PolicyParams, Table3,
};
use crate::math::logsumexp;
use crate::mdp::{apply_discount_transform, apply_temperature, TabularMdp};
use crate::oracle::{enumerate_feasible, maxent_objective_by_decomposition};
use crate::soft::{
    extract_policy, soft_value_iteration, soft_value_iteration_at_temperature,
    stationary_soft_value_iteration,
};
use output::CsvTable;

pub const EXIT_OK: i32 = 0;
/// Bad config, usage, demos, features or arguments.
pub const EXIT_INVALID_INPUT: i32 = 1;
pub const EXIT_INVALID_MDP: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_DIVERGENCE: i32 = 4;
pub const EXIT_IO: i32 = 5;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidMdp(_) => EXIT_INVALID_MDP,
        Error::Capacity { .. } => EXIT_CAPACITY,
        Error::Divergence(_) => EXIT_DIVERGENCE,
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_INVALID_INPUT,
    }
}

/// Runs the experiment and returns the paths written, main artifact first.
pub fn run(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let meta = Meta {
        toolkit: TOOLKIT,
        version: VERSION,
        task: config.task.name(),
        config_hash: config.hash(),
    };
    let mdp = TabularMdp::load(&config.mdp_path)?;
    let out = config.output_path.clone();

    let artifacts = match &config.params {
        TaskParams::SolveExact(_) => vec![(out, solve_exact(&mdp, &meta, config)?)],
        TaskParams::SolveSoft(p) => vec![(out, solve_soft(&mdp, p, &meta, config)?)],
        TaskParams::CompareRisk(_) => vec![(out, compare_risk(&mdp, &meta)?)],
        TaskParams::OracleDump(_) => vec![(out, oracle_dump(&mdp, &meta)?)],
        TaskParams::Pg(p) => pg(&mdp, p, &meta, config)?,
        TaskParams::ActorCritic(p) => actor_critic(&mdp, p, &meta, config)?,
        TaskParams::SoftQ(p) => soft_q(&mdp, p, &meta, config)?,
        TaskParams::Irl(p) => irl(&mdp, p, &meta, config)?,
    };
    write_atomically(&artifacts)?;
    Ok(artifacts.into_iter().map(|(p, _)| p).collect())
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    meta: &'a Meta,
    config: &'a ExperimentConfig,
    result: T,
}

fn document<T: Serialize>(meta: &Meta, config: &ExperimentConfig, result: T) -> Result<Vec<u8>> {
    to_json_bytes(&Document {
        meta,
        config,
        result,
    })
}

fn with_curve<T: Serialize>(
    meta: &Meta,
    config: &ExperimentConfig,
    result: T,
    curve: CsvTable,
) -> Result<Vec<(PathBuf, Vec<u8>)>> {
    Ok(vec![
        (config.output_path.clone(), document(meta, config, result)?),
        (curve_path(&config.output_path), curve.to_bytes(meta)?),
    ])
}

fn solve_exact(mdp: &TabularMdp, meta: &Meta, config: &ExperimentConfig) -> Result<Vec<u8>> {
    let messages = backward_messages(mdp);
    let policy = message_ratio_policy(&messages);
    document(
        meta,
        config,
        serde_json::json!({
            "log_evidence": messages.log_evidence(mdp.initial_dist()),
            "log_q": messages.log_q,
            "log_q_prior_normalized": messages.prior_normalized_q(),
            "log_v": messages.log_v,
            "policy": policy.pi,
        }),
    )
}

fn solve_soft(
    mdp: &TabularMdp,
    p: &SolveSoftParams,
    meta: &Meta,
    config: &ExperimentConfig,
) -> Result<Vec<u8>> {
    let discounted = p.discount < 1.0;
    let model = if discounted {
        apply_discount_transform(mdp, p.discount)?
    } else {
        mdp.clone()
    };
    let absorbing = discounted.then_some(mdp.num_states());

    if p.stationary {
        let scaled = apply_temperature(&model, p.temperature)?;
        let terminal: Vec<usize> = absorbing.into_iter().collect();
        let sol =
            stationary_soft_value_iteration(&scaled, &terminal, p.convergence_tol, p.max_iters)?;
        let policy = sol.policy_rows();
        let scale = |xs: &[f64]| xs.iter().map(|x| x * p.temperature).collect::<Vec<_>>();
        return document(
            meta,
            config,
            serde_json::json!({
                "absorbing_state": absorbing,
                "iterations": sol.iterations,
                "policy": policy,
                "q": sol.q.iter().map(|row| scale(row)).collect::<Vec<_>>(),
                "residual": sol.residual,
                "v": scale(&sol.v),
            }),
        );
    }

    let (tables, policy) = soft_value_iteration_at_temperature(&model, p.temperature)?;
    document(
        meta,
        config,
        serde_json::json!({
            "absorbing_state": absorbing,
            "policy": policy.pi,
            "q": tables.q,
            "q_prior_normalized": tables.prior_normalized_q(),
            "v": tables.v,
        }),
    )
}

fn compare_risk(mdp: &TabularMdp, meta: &Meta) -> Result<Vec<u8>> {
    let messages = backward_messages(mdp);
    let exact_policy = message_ratio_policy(&messages);
    let tables = soft_value_iteration(mdp);
    let soft_policy = extract_policy(&tables);
    let rows = [
        ("exact", &messages.log_q, messages.prior_normalized_q(), &exact_policy.pi),
        ("variational", &tables.q, tables.prior_normalized_q(), &soft_policy.pi),
    ];

    let mut csv = CsvTable::new(vec!["solver", "t", "state", "action", "q", "q_prior_normalized", "policy"]);
    for (solver, q, qn, pi) in rows {
        for t in 0..mdp.horizon() {
            for s in 0..mdp.num_states() {
                for a in 0..mdp.num_actions() {
                    csv.push(vec![
                        solver.to_string(),
                        t.to_string(),
                        s.to_string(),
                        a.to_string(),
                        fmt_f64(q[t][s][a]),
                        fmt_f64(qn[t][s][a]),
                        fmt_f64(pi[t][s][a]),
                    ]);
                }
            }
        }
    }
    csv.to_bytes(meta)
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn oracle_dump(mdp: &TabularMdp, meta: &Meta) -> Result<Vec<u8>> {
    let all = enumerate_feasible(mdp)?;
    let log_weights: Vec<f64> = all.iter().map(|e| e.dynamics_log_prob + e.ret).collect();
    let log_norm = logsumexp(&log_weights);

    let mut csv = CsvTable::new(vec!["id", "states", "actions", "dynamics_log_prob", "return", "log_prob"]);
    for (id, (e, lw)) in all.iter().zip(&log_weights).enumerate() {
        csv.push(vec![
            id.to_string(),
            join(&e.trajectory.states),
            join(&e.trajectory.actions),
            fmt_f64(e.dynamics_log_prob),
            fmt_f64(e.ret),
            fmt_f64(lw - log_norm),
        ]);
    }
    csv.to_bytes(meta)
}

fn pg(
    mdp: &TabularMdp,
    p: &PgParams,
    meta: &Meta,
    config: &ExperimentConfig,
) -> Result<Vec<(PathBuf, Vec<u8>)>> {
    let (params, records) = train_policy_gradient(
        mdp,
        PolicyParams::zeros(mdp),
        p.rate,
        p.iters,
        p.estimator,
        p.samples,
        config.seed,
    )?;
    let policy = params.policy();
    let objective = maxent_objective_by_decomposition(mdp, &policy)?;

    let mut curve = CsvTable::new(vec!["iteration", "objective", "grad_max_abs"]);
    for r in &records {
        curve.push(vec![r.iteration.to_string(), fmt_f64(r.objective), fmt_f64(r.grad_max_abs)]);
    }
    with_curve(
        meta,
        config,
        serde_json::json!({
            "logits": params.logits,
            "objective": objective,
            "policy": policy.pi,
        }),
        curve,
    )
}

fn actor_critic(
    mdp: &TabularMdp,
    p: &ActorCriticParams,
    meta: &Meta,
    config: &ExperimentConfig,
) -> Result<Vec<(PathBuf, Vec<u8>)>> {
    let init = (PolicyParams::zeros(mdp), CriticParams::zeros(mdp));
    let (params, critic, records) =
        train_actor_critic(mdp, init, p.actor_rate, p.critic_rate, p.iters)?;
    let policy = params.policy();
    let objective = maxent_objective_by_decomposition(mdp, &policy)?;

    let mut curve = CsvTable::new(vec!["iteration", "objective", "loss_q", "loss_v"]);
    for r in &records {
        curve.push(vec![
            r.iteration.to_string(),
            fmt_f64(r.objective),
            fmt_f64(r.loss_q),
            fmt_f64(r.loss_v),
        ]);
    }
    with_curve(
        meta,
        config,
        serde_json::json!({
            "logits": params.logits,
            "objective": objective,
            "policy": policy.pi,
            "q_table": critic.q_table,
            "v_table": critic.v_table,
        }),
        curve,
    )
}

/// Sup-norm gap between `q` and its own soft Bellman target.
fn bellman_residual(mdp: &TabularMdp, q: &Table3) -> f64 {
    (0..q.len())
        .flat_map(|t| {
            let target = soft_q_target(mdp, q.get(t + 1).map(Vec::as_slice));
            q[t].iter()
                .flatten()
                .zip(target.into_iter().flatten())
                .map(|(a, b)| (a - b).abs())
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

fn soft_q(
    mdp: &TabularMdp,
    p: &SoftQParams,
    meta: &Meta,
    config: &ExperimentConfig,
) -> Result<Vec<(PathBuf, Vec<u8>)>> {
    let mut critic = CriticParams::zeros(mdp);
    let mut curve = CsvTable::new(vec!["sweep", "max_change", "bellman_residual"]);
    for sweep in 1..=p.sweeps {
        let next = soft_q_learning(mdp, &critic.q_table, p.rate, 1)?;
        let change = next
            .q_table
            .iter()
            .flatten()
            .flatten()
            .zip(critic.q_table.iter().flatten().flatten())
            .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
        critic = next;
        curve.push(vec![
            sweep.to_string(),
            fmt_f64(change),
            fmt_f64(bellman_residual(mdp, &critic.q_table)),
        ]);
    }
    let policy: Table3 = critic
        .q_table
        .iter()
        .zip(&critic.v_table)
        .map(|(step, vs)| {
            step.iter()
                .zip(vs)
                .map(|(row, v)| row.iter().map(|q| (q - v).exp()).collect())
                .collect()
        })
        .collect();
    with_curve(
        meta,
        config,
        serde_json::json!({
            "policy": policy,
            "q_table": critic.q_table,
            "v_table": critic.v_table,
        }),
        curve,
    )
}

fn irl(
    mdp: &TabularMdp,
    p: &IrlParams,
    meta: &Meta,
    config: &ExperimentConfig,
) -> Result<Vec<(PathBuf, Vec<u8>)>> {
    let features = FeatureMap::load(&p.features_path)?;
    let demos = DemoSet::load_trajectories(&p.demos_path)?;
    let options = IrlFitOptions {
        rate: p.rate,
        iters: p.iters,
        l2: p.l2,
        ..IrlFitOptions::default()
    };
    let (weights, report) = irl_fit(mdp, &features, &demos, options)?;
    let policy = maxent_policy(mdp, &features, &weights)?;
    let log_likelihood = irl_log_likelihood(mdp, &features, &weights, &demos)?;

    let mut curve = CsvTable::new(vec!["iteration", "objective", "step", "grad_norm"]);
    for r in &report.curve {
        curve.push(vec![
            r.iteration.to_string(),
            fmt_f64(r.objective),
            fmt_f64(r.step),
            fmt_f64(r.grad_norm),
        ]);
    }
    with_curve(
        meta,
        config,
        serde_json::json!({
            "final_grad_norm": report.final_grad_norm,
            "log_likelihood": log_likelihood,
            "policy": policy.pi,
            "reward": features.reward(&weights)?,
            "weights": weights.weights,
        }),
        curve,
    )
}
