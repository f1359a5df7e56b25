//! Variational solution with the dynamics clamped to the truth: soft value
//! iteration, max-ent policy extraction and the evidence lower bound.
//!
//! The only difference from [`crate::exact`] is the successor term: an
//! expectation `E[V(s')]` instead of `log E[exp V(s')]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::prior_normalized;
use crate::math::logsumexp;
use crate::mdp::{apply_temperature, TabularMdp};
use crate::policy::{MaxEntPolicy, Policy};

/// Finite-horizon soft Q and V tables: `q[t][s][a]`, `v[t][s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftValueTables {
    pub q: Vec<Vec<Vec<f64>>>,
    pub v: Vec<Vec<f64>>,
}

impl SoftValueTables {
    pub fn horizon(&self) -> usize {
        self.q.len()
    }

    /// Q-values normalized to a uniform action prior, for comparison with
    /// figures quoted under that convention.
    pub fn prior_normalized_q(&self) -> Vec<Vec<Vec<f64>>> {
        prior_normalized(&self.q, self.q[0][0].len())
    }

    fn scaled(mut self, factor: f64) -> Self {
        self.q
            .iter_mut()
            .flatten()
            .flatten()
            .for_each(|x| *x *= factor);
        self.v.iter_mut().flatten().for_each(|x| *x *= factor);
        self
    }
}

fn expected_next(next: &[f64], v_next: &[f64]) -> f64 {
    next.iter()
        .zip(v_next)
        .filter(|(&p, _)| p > 0.0)
        .map(|(p, v)| p * v)
        .sum()
}

/// `q[s][a] = r(s,a) + Σ_{s'} p(s'|s,a) v_next[s']`.
pub fn soft_bellman_backup(mdp: &TabularMdp, v_next: &[f64]) -> Vec<Vec<f64>> {
    (0..mdp.num_states())
        .map(|s| {
            (0..mdp.num_actions())
                .map(|a| mdp.reward(s, a) + expected_next(mdp.next_dist(s, a), v_next))
                .collect()
        })
        .collect()
}

pub fn soft_value_iteration(mdp: &TabularMdp) -> SoftValueTables {
    let horizon = mdp.horizon();
    let mut q = vec![Vec::new(); horizon];
    let mut v = vec![Vec::new(); horizon];
    for t in (0..horizon).rev() {
        let q_t = if t + 1 == horizon {
            mdp.rewards().to_vec()
        } else {
            soft_bellman_backup(mdp, &v[t + 1])
        };
        v[t] = q_t.iter().map(|row| logsumexp(row)).collect();
        q[t] = q_t;
    }
    SoftValueTables { q, v }
}

/// `π = exp(q − v)`. Every exponent is non-positive.
pub fn extract_policy(tables: &SoftValueTables) -> MaxEntPolicy {
    Policy {
        pi: tables
            .q
            .iter()
            .zip(&tables.v)
            .map(|(q_t, v_t)| {
                q_t.iter()
                    .zip(v_t)
                    .map(|(row, &v)| row.iter().map(|&q| (q - v).exp()).collect())
                    .collect()
            })
            .collect(),
    }
}

/// Solves at temperature `temperature` and reports values in reward units:
/// the tables are `temperature ×` those of the reward-scaled problem.
pub fn soft_value_iteration_at_temperature(
    mdp: &TabularMdp,
    temperature: f64,
) -> Result<(SoftValueTables, MaxEntPolicy)> {
    let scaled = apply_temperature(mdp, temperature)?;
    let tables = soft_value_iteration(&scaled);
    let policy = extract_policy(&tables);
    Ok((tables.scaled(temperature), policy))
}

/// On-policy soft evaluation: `q = r + E[v']`, `v = Σ_a π (q − log π)`.
pub fn soft_policy_evaluation(mdp: &TabularMdp, policy: &Policy) -> Result<SoftValueTables> {
    policy.check_for(mdp)?;
    let horizon = mdp.horizon();
    let mut q = vec![Vec::new(); horizon];
    let mut v = vec![Vec::new(); horizon];
    for t in (0..horizon).rev() {
        let q_t = if t + 1 == horizon {
            mdp.rewards().to_vec()
        } else {
            soft_bellman_backup(mdp, &v[t + 1])
        };
        v[t] = q_t
            .iter()
            .zip(&policy.pi[t])
            .map(|(q_row, pi_row)| {
                q_row
                    .iter()
                    .zip(pi_row)
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(q, p)| p * (q - p.ln()))
                    .sum()
            })
            .collect();
        q[t] = q_t;
    }
    Ok(SoftValueTables { q, v })
}

/// `E_q[Σ_t r(s_t,a_t) − log π(a_t|s_t)]` for trajectories drawn from the
/// MDP's initial distribution under `policy`. Evaluated by a backward pass;
/// [`crate::oracle::maxent_objective_by_decomposition`] computes the same
/// quantity forward.
pub fn elbo(mdp: &TabularMdp, policy: &Policy) -> Result<f64> {
    let eval = soft_policy_evaluation(mdp, policy)?;
    Ok(mdp
        .initial_dist()
        .iter()
        .zip(&eval.v[0])
        .filter(|(&p, _)| p > 0.0)
        .map(|(p, v)| p * v)
        .sum())
}

/// Standard finite-horizon value iteration with a hard max.
pub fn hard_value_iteration(mdp: &TabularMdp) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<f64>>) {
    let horizon = mdp.horizon();
    let mut q = vec![Vec::new(); horizon];
    let mut v: Vec<Vec<f64>> = vec![Vec::new(); horizon];
    for t in (0..horizon).rev() {
        let q_t = if t + 1 == horizon {
            mdp.rewards().to_vec()
        } else {
            soft_bellman_backup(mdp, &v[t + 1])
        };
        v[t] = q_t
            .iter()
            .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        q[t] = q_t;
    }
    (q, v)
}

/// Time-invariant soft values for an infinite-horizon problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarySolution {
    pub q: Vec<Vec<f64>>,
    pub v: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl StationarySolution {
    pub fn policy_rows(&self) -> Vec<Vec<f64>> {
        self.q
            .iter()
            .zip(&self.v)
            .map(|(row, &v)| row.iter().map(|&q| (q - v).exp()).collect())
            .collect()
    }
}

/// Iterates the soft backup on a single `(q, v)` pair until the sup-norm
/// change in `v` drops below `tol`.
///
/// States listed in `terminal` hold value zero: they end the episode, which is
/// how the absorbing state from [`crate::mdp::apply_discount_transform`] must
/// be treated (otherwise it would accrue `ln |A|` per step forever).
pub fn stationary_soft_value_iteration(
    mdp: &TabularMdp,
    terminal: &[usize],
    tol: f64,
    max_iters: usize,
) -> Result<StationarySolution> {
    if !(tol > 0.0) || max_iters == 0 {
        return Err(Error::InvalidArgument(
            "stationary solve needs tol > 0 and max_iters >= 1".into(),
        ));
    }
    for &s in terminal {
        mdp.check_state(s)?;
    }
    let ns = mdp.num_states();
    let mut v = vec![0.0; ns];
    for iteration in 1..=max_iters {
        let q = soft_bellman_backup(mdp, &v);
        let mut next: Vec<f64> = q.iter().map(|row| logsumexp(row)).collect();
        for &s in terminal {
            next[s] = 0.0;
        }
        let residual = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if !residual.is_finite() {
            return Err(Error::Divergence(format!(
                "stationary soft values became non-finite at sweep {iteration}"
            )));
        }
        v = next;
        if residual < tol {
            return Ok(StationarySolution {
                q,
                v,
                iterations: iteration,
                residual,
            });
        }
    }
    Err(Error::Divergence(format!(
        "stationary soft value iteration did not reach tol {tol} in {max_iters} sweeps"
    )))
}
