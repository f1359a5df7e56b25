use serde::{Deserialize, Serialize};

use super::{next_values, zeros3, CriticParams, PolicyParams, Table2, Table3};
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::oracle::maxent_objective_by_decomposition;
use crate::policy::{state_marginals, Policy};

/// Bellman residuals of both critic heads, weighted by the policy's marginals.
struct Residuals {
    /// `r + E[V_ψ(s')] − Q_φ(s,a)`
    q: Table3,
    /// `Σ_a π (Q_φ − log π) − V_ψ(s)`
    v: Table2,
    mu: Table2,
}

fn residuals(mdp: &TabularMdp, policy: &Policy, critic: &CriticParams) -> Residuals {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mu = state_marginals(mdp, policy, mdp.initial_dist());
    let mut q = zeros3(mdp);
    let mut v = vec![vec![0.0; ns]; mdp.horizon()];
    for t in 0..mdp.horizon() {
        let v_next = next_values(&critic.v_table, t, ns);
        for s in 0..ns {
            for a in 0..na {
                let backup: f64 = mdp
                    .next_dist(s, a)
                    .iter()
                    .zip(&v_next)
                    .filter(|(&p, _)| p > 0.0)
                    .map(|(p, v)| p * v)
                    .sum();
                q[t][s][a] = mdp.reward(s, a) + backup - critic.q_table[t][s][a];
            }
            let target: f64 = policy
                .row(t, s)
                .iter()
                .zip(&critic.q_table[t][s])
                .filter(|(&p, _)| p > 0.0)
                .map(|(p, q)| p * (q - p.ln()))
                .sum();
            v[t][s] = target - critic.v_table[t][s];
        }
    }
    Residuals { q, v, mu }
}

/// `(E(φ), E(ψ))`: squared Bellman errors of the Q and V heads, summed over
/// steps and weighted by the marginals of `θ`'s policy.
pub fn critic_losses(mdp: &TabularMdp, params: &PolicyParams, critic: &CriticParams) -> (f64, f64) {
    let policy = params.policy();
    let res = residuals(mdp, &policy, critic);
    let mut loss_q = 0.0;
    let mut loss_v = 0.0;
    for t in 0..mdp.horizon() {
        for s in 0..mdp.num_states() {
            let m = res.mu[t][s];
            if m == 0.0 {
                continue;
            }
            for (a, p) in policy.row(t, s).iter().enumerate() {
                loss_q += m * p * res.q[t][s][a].powi(2);
            }
            loss_v += m * res.v[t][s].powi(2);
        }
    }
    (loss_q, loss_v)
}

fn check_rates(actor_rate: f64, critic_rate: f64) -> Result<()> {
    if actor_rate > 0.0 && critic_rate > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "rates must be positive, got actor {actor_rate}, critic {critic_rate}"
        )))
    }
}

/// Gradient-descent step on both critic losses with the policy frozen.
fn apply_critic_step(
    mdp: &TabularMdp,
    policy: &Policy,
    res: &Residuals,
    critic: &mut CriticParams,
    critic_rate: f64,
) {
    for t in 0..mdp.horizon() {
        for s in 0..mdp.num_states() {
            let m = res.mu[t][s];
            for (a, p) in policy.row(t, s).iter().enumerate() {
                // dE(φ)/dφ = −2 d(s,a) · residual
                critic.q_table[t][s][a] += critic_rate * 2.0 * m * p * res.q[t][s][a];
            }
            critic.v_table[t][s] += critic_rate * 2.0 * m * res.v[t][s];
        }
    }
}

/// One simultaneous update: descent on both critic losses, and ascent on the
/// actor objective with advantage `Q_φ − log π − V_ψ`.
pub fn actor_critic_step(
    mdp: &TabularMdp,
    params: &PolicyParams,
    critic: &CriticParams,
    actor_rate: f64,
    critic_rate: f64,
) -> Result<(PolicyParams, CriticParams)> {
    check_rates(actor_rate, critic_rate)?;
    let policy = params.policy();
    let res = residuals(mdp, &policy, critic);

    let mut next_params = params.clone();
    for t in 0..mdp.horizon() {
        for s in 0..mdp.num_states() {
            let m = res.mu[t][s];
            if m == 0.0 {
                continue;
            }
            let pi = policy.row(t, s);
            let advantage: Vec<f64> = pi
                .iter()
                .zip(&critic.q_table[t][s])
                .map(|(p, q)| q - p.ln() - critic.v_table[t][s])
                .collect();
            for b in 0..pi.len() {
                let grad: f64 = pi
                    .iter()
                    .zip(&advantage)
                    .enumerate()
                    .map(|(a, (p, adv))| p * adv * ((a == b) as u8 as f64 - pi[b]))
                    .sum();
                next_params.logits[t][s][b] += actor_rate * m * grad;
            }
        }
    }

    let mut next_critic = critic.clone();
    apply_critic_step(mdp, &policy, &res, &mut next_critic, critic_rate);
    Ok((next_params, next_critic))
}

/// Critic update alone, with `θ` frozen.
pub fn critic_only_step(
    mdp: &TabularMdp,
    params: &PolicyParams,
    critic: &CriticParams,
    critic_rate: f64,
) -> Result<CriticParams> {
    check_rates(1.0, critic_rate)?;
    let policy = params.policy();
    let res = residuals(mdp, &policy, critic);
    let mut next = critic.clone();
    apply_critic_step(mdp, &policy, &res, &mut next, critic_rate);
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorCriticRecord {
    pub iteration: usize,
    pub objective: f64,
    pub loss_q: f64,
    pub loss_v: f64,
}

pub type ActorCriticCurve = Vec<ActorCriticRecord>;

pub fn train_actor_critic(
    mdp: &TabularMdp,
    init: (PolicyParams, CriticParams),
    actor_rate: f64,
    critic_rate: f64,
    iters: usize,
) -> Result<(PolicyParams, CriticParams, ActorCriticCurve)> {
    if iters == 0 {
        return Err(Error::InvalidArgument("iters must be >= 1".into()));
    }
    let (mut params, mut critic) = init;
    let mut curve = Vec::with_capacity(iters);
    for iteration in 0..iters {
        let objective = maxent_objective_by_decomposition(mdp, &params.policy())?;
        let (loss_q, loss_v) = critic_losses(mdp, &params, &critic);
        if !(objective.is_finite() && loss_q.is_finite() && loss_v.is_finite()) {
            return Err(Error::Divergence(format!(
                "actor-critic produced non-finite values at iteration {iteration}"
            )));
        }
        curve.push(ActorCriticRecord {
            iteration,
            objective,
            loss_q,
            loss_v,
        });
        (params, critic) = actor_critic_step(mdp, &params, &critic, actor_rate, critic_rate)?;
    }
    Ok((params, critic, curve))
}
