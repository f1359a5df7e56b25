//! Sum-product backward messages for the optimality-variable graphical model.
//!
//! `log_q[t][s][a] = log p(O_{t..T} | s, a)` and `log_v[t][s]` is its
//! log-sum-exp over actions (counting measure). The recursion takes
//! `log E[exp V(s')]` over successors, which is what makes the resulting
//! policy risk seeking under stochastic dynamics.

use serde::{Deserialize, Serialize};

use crate::math::{log_weighted_sum_exp, logsumexp};
use crate::mdp::TabularMdp;
use crate::policy::Policy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageTable {
    pub log_q: Vec<Vec<Vec<f64>>>,
    pub log_v: Vec<Vec<f64>>,
}

/// `(T − 1 − t) · ln |A|`: the amount by which counting-measure values at step
/// `t` exceed values computed with a uniform action prior `1/|A|`.
///
/// Subtracting it from `q[t]` gives Q-values normalized to the prior;
/// policies are unaffected.
pub fn action_prior_offset(num_actions: usize, horizon: usize, t: usize) -> f64 {
    (horizon - 1 - t) as f64 * (num_actions as f64).ln()
}

/// `q` with [`action_prior_offset`] removed at every step.
pub fn prior_normalized(q: &[Vec<Vec<f64>>], num_actions: usize) -> Vec<Vec<Vec<f64>>> {
    let horizon = q.len();
    q.iter()
        .enumerate()
        .map(|(t, step)| {
            let c = action_prior_offset(num_actions, horizon, t);
            step.iter()
                .map(|row| row.iter().map(|x| x - c).collect())
                .collect()
        })
        .collect()
}

/// One optimistic step: `r(s,a) + log Σ_{s'} p(s'|s,a) exp(V(s'))`.
pub fn optimistic_soft_backup(mdp: &TabularMdp, log_v_next: &[f64]) -> Vec<Vec<f64>> {
    (0..mdp.num_states())
        .map(|s| {
            (0..mdp.num_actions())
                .map(|a| mdp.reward(s, a) + log_weighted_sum_exp(mdp.next_dist(s, a), log_v_next))
                .collect()
        })
        .collect()
}

/// Backward pass from the last step, entirely in the log domain.
pub fn backward_messages(mdp: &TabularMdp) -> MessageTable {
    let horizon = mdp.horizon();
    let mut log_q = vec![Vec::new(); horizon];
    let mut log_v = vec![Vec::new(); horizon];
    for t in (0..horizon).rev() {
        let q_t = if t + 1 == horizon {
            mdp.rewards().to_vec()
        } else {
            optimistic_soft_backup(mdp, &log_v[t + 1])
        };
        log_v[t] = q_t.iter().map(|row| logsumexp(row)).collect();
        log_q[t] = q_t;
    }
    MessageTable { log_q, log_v }
}

impl MessageTable {
    /// `log p(O_{1:T})` under a uniform action prior, given an initial
    /// state distribution.
    pub fn log_evidence(&self, initial_dist: &[f64]) -> f64 {
        let num_actions = self.log_q[0][0].len();
        log_weighted_sum_exp(initial_dist, &self.log_v[0])
            - self.log_q.len() as f64 * (num_actions as f64).ln()
    }

    /// Q-values normalized to the uniform action prior.
    pub fn prior_normalized_q(&self) -> Vec<Vec<Vec<f64>>> {
        prior_normalized(&self.log_q, self.log_q[0][0].len())
    }
}

/// `π_t(a|s) = β_t(s,a) / β_t(s) = exp(log_q − log_v)`.
pub fn message_ratio_policy(messages: &MessageTable) -> Policy {
    Policy {
        pi: messages
            .log_q
            .iter()
            .zip(&messages.log_v)
            .map(|(q_t, v_t)| {
                q_t.iter()
                    .zip(v_t)
                    .map(|(row, &v)| row.iter().map(|&q| (q - v).exp()).collect())
                    .collect()
            })
            .collect(),
    }
}
