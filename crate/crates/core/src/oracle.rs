//! Brute-force ground truth: enumerate every dynamics-feasible trajectory and
//! compute posteriors, conditionals, KL divergences and objectives directly.
//!
//! Nothing here shares code with the dynamic-programming solvers beyond the
//! MDP accessors and `logsumexp`, so the two can be compared honestly.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::math::logsumexp;
use crate::mdp::{TabularMdp, Trajectory};
use crate::policy::{state_marginals, Policy};

/// Enumeration refuses problems with more than this many `(S·A)^T` trajectories.
pub const ENUMERATION_LIMIT: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryEntry {
    pub prob: f64,
    pub log_prob: f64,
}

/// Exact probability map over trajectories. Only trajectories with positive
/// probability are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDistribution {
    pub entries: BTreeMap<Trajectory, TrajectoryEntry>,
    pub total_mass: f64,
}

impl TrajectoryDistribution {
    fn from_log_weights(weights: Vec<(Trajectory, f64)>) -> (Self, f64) {
        let logs: Vec<f64> = weights.iter().map(|(_, lw)| *lw).collect();
        let log_norm = logsumexp(&logs);
        let entries: BTreeMap<_, _> = weights
            .into_iter()
            .filter(|(_, lw)| *lw > f64::NEG_INFINITY)
            .map(|(tau, lw)| {
                let log_prob = lw - log_norm;
                (
                    tau,
                    TrajectoryEntry {
                        prob: log_prob.exp(),
                        log_prob,
                    },
                )
            })
            .collect();
        let total_mass = entries.values().map(|e| e.prob).sum();
        (
            Self {
                entries,
                total_mass,
            },
            log_norm,
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn prob(&self, tau: &Trajectory) -> f64 {
        self.entries.get(tau).map_or(0.0, |e| e.prob)
    }

    /// Expectation of `f` over the distribution.
    pub fn expect(&self, f: impl Fn(&Trajectory) -> f64) -> f64 {
        self.entries.iter().map(|(tau, e)| e.prob * f(tau)).sum()
    }
}

/// Posterior over trajectories plus the log-evidence `log p(O_{1:T})` under a
/// uniform action prior.
#[derive(Debug, Clone)]
pub struct Posterior {
    pub distribution: TrajectoryDistribution,
    pub log_evidence: f64,
}

/// `(S·A)^T`, as a float so it cannot overflow.
pub fn enumeration_size(mdp: &TabularMdp) -> f64 {
    ((mdp.num_states() * mdp.num_actions()) as f64).powi(mdp.horizon() as i32)
}

pub fn check_capacity(mdp: &TabularMdp) -> Result<()> {
    let required = enumeration_size(mdp);
    if required > ENUMERATION_LIMIT {
        Err(Error::Capacity {
            required,
            limit: ENUMERATION_LIMIT,
        })
    } else {
        Ok(())
    }
}

/// A feasible trajectory with its dynamics log-probability and return.
#[derive(Debug, Clone)]
pub struct EnumeratedTrajectory {
    pub trajectory: Trajectory,
    pub dynamics_log_prob: f64,
    pub ret: f64,
}

/// Every trajectory with non-zero dynamics probability, in lexicographic
/// `(s_0, a_0, s_1, a_1, ...)` order. Fans out over the first state; the merge
/// keeps that order, so the output does not depend on the thread schedule.
pub fn enumerate_feasible(mdp: &TabularMdp) -> Result<Vec<EnumeratedTrajectory>> {
    check_capacity(mdp)?;
    let starts: Vec<usize> = (0..mdp.num_states())
        .filter(|&s| mdp.initial_dist()[s] > 0.0)
        .collect();
    let chunks: Vec<Vec<EnumeratedTrajectory>> = starts
        .par_iter()
        .map(|&s0| {
            let mut out = Vec::new();
            let mut states = vec![s0];
            let mut actions = Vec::new();
            extend(
                mdp,
                &mut states,
                &mut actions,
                mdp.initial_dist()[s0].ln(),
                0.0,
                &mut out,
            );
            out
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

fn extend(
    mdp: &TabularMdp,
    states: &mut Vec<usize>,
    actions: &mut Vec<usize>,
    log_prob: f64,
    ret: f64,
    out: &mut Vec<EnumeratedTrajectory>,
) {
    let s = *states.last().expect("non-empty prefix");
    let t = states.len() - 1;
    for a in 0..mdp.num_actions() {
        let ret = ret + mdp.reward(s, a);
        actions.push(a);
        if t + 1 == mdp.horizon() {
            out.push(EnumeratedTrajectory {
                trajectory: Trajectory::new(states.clone(), actions.clone()),
                dynamics_log_prob: log_prob,
                ret,
            });
        } else {
            for (sp, &p) in mdp.next_dist(s, a).iter().enumerate() {
                if p > 0.0 {
                    states.push(sp);
                    extend(mdp, states, actions, log_prob + p.ln(), ret, out);
                    states.pop();
                }
            }
        }
        actions.pop();
    }
}

/// `p(τ | O) ∝ p(s_0) Π p(s'|s,a) · exp(Σ r)`.
pub fn posterior_trajectory_distribution(mdp: &TabularMdp) -> Result<Posterior> {
    let weights: Vec<(Trajectory, f64)> = enumerate_feasible(mdp)?
        .into_iter()
        .map(|e| (e.trajectory, e.dynamics_log_prob + e.ret))
        .collect();
    let (distribution, log_norm) = TrajectoryDistribution::from_log_weights(weights);
    // The uniform action prior contributes |A|^{-T}.
    let log_evidence = log_norm - mdp.horizon() as f64 * (mdp.num_actions() as f64).ln();
    Ok(Posterior {
        distribution,
        log_evidence,
    })
}

/// Trajectory distribution induced by running `policy` under the true dynamics.
pub fn policy_trajectory_distribution(
    mdp: &TabularMdp,
    policy: &Policy,
) -> Result<TrajectoryDistribution> {
    policy.check_for(mdp)?;
    let weights: Vec<(Trajectory, f64)> = enumerate_feasible(mdp)?
        .into_iter()
        .map(|e| {
            let lp: f64 = e
                .trajectory
                .steps()
                .enumerate()
                .map(|(t, (s, a))| policy.pi[t][s][a].ln())
                .sum();
            (e.trajectory, e.dynamics_log_prob + lp)
        })
        .collect();
    Ok(TrajectoryDistribution::from_log_weights(weights).0)
}

/// `p(a_t | s_t, O)` by summing the posterior over trajectories. `None` marks
/// `(t, s)` pairs the posterior never visits.
pub type ConditionalTable = Vec<Vec<Option<Vec<f64>>>>;

pub fn posterior_policy_by_marginalization(mdp: &TabularMdp) -> Result<ConditionalTable> {
    let posterior = posterior_trajectory_distribution(mdp)?;
    let (ns, na, horizon) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
    let mut joint = vec![vec![vec![0.0; na]; ns]; horizon];
    for (tau, entry) in &posterior.distribution.entries {
        for (t, (s, a)) in tau.steps().enumerate() {
            joint[t][s][a] += entry.prob;
        }
    }
    Ok(joint
        .into_iter()
        .map(|step| {
            step.into_iter()
                .map(|row| {
                    let total: f64 = row.iter().sum();
                    (total > 0.0).then(|| row.iter().map(|x| x / total).collect())
                })
                .collect()
        })
        .collect())
}

/// `D_KL(q ‖ p) = Σ_τ q(τ) (log q(τ) − log p(τ))`.
pub fn kl_divergence(q: &TrajectoryDistribution, p: &TrajectoryDistribution) -> Result<f64> {
    let mut kl = 0.0;
    for (tau, qe) in &q.entries {
        match p.entries.get(tau) {
            Some(pe) => kl += qe.prob * (qe.log_prob - pe.log_prob),
            None => {
                return Err(Error::AbsoluteContinuity {
                    trajectory: tau.to_string(),
                })
            }
        }
    }
    Ok(kl)
}

/// `Σ_t E[r(s_t,a_t)] + E[H(π_t(·|s_t))]`, by forward propagation of state
/// marginals from the MDP's initial distribution.
pub fn maxent_objective_by_decomposition(mdp: &TabularMdp, policy: &Policy) -> Result<f64> {
    policy.check_for(mdp)?;
    let mu = state_marginals(mdp, policy, mdp.initial_dist());
    let mut total = 0.0;
    for (t, mu_t) in mu.iter().enumerate() {
        for (s, &m) in mu_t.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let row = policy.row(t, s);
            let expected_reward: f64 = row
                .iter()
                .enumerate()
                .map(|(a, p)| p * mdp.reward(s, a))
                .sum();
            total += m * (expected_reward + crate::math::entropy(row));
        }
    }
    Ok(total)
}

/// The same objective, as `E_q̂[Σ r − Σ log π]` over the enumerated
/// trajectory distribution of `policy`.
pub fn maxent_objective_by_enumeration(mdp: &TabularMdp, policy: &Policy) -> Result<f64> {
    let q = policy_trajectory_distribution(mdp, policy)?;
    Ok(q.expect(|tau| {
        tau.steps()
            .enumerate()
            .map(|(t, (s, a))| mdp.reward(s, a) - policy.pi[t][s][a].ln())
            .sum()
    }))
}
