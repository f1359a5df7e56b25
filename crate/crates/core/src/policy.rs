//! Time-indexed tabular policies and exact forward propagation of their
//! state and state-action marginals under the true dynamics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::mdp::TabularMdp;

/// Row sums of a policy must be within this of one.
pub const ROW_TOL: f64 = 1e-12;

/// `pi[t][s][a]` = π_t(a | s). Every row is a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub pi: Vec<Vec<Vec<f64>>>,
}

/// The policy extracted from soft value tables is just a policy.
pub type MaxEntPolicy = Policy;

impl Policy {
    pub fn new(pi: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let policy = Self { pi };
        policy.check_rows()?;
        Ok(policy)
    }

    pub fn uniform(horizon: usize, num_states: usize, num_actions: usize) -> Self {
        let row = vec![1.0 / num_actions as f64; num_actions];
        Self {
            pi: vec![vec![row; num_states]; horizon],
        }
    }

    /// Row-wise softmax of a `T×S×A` table.
    pub fn from_logits(logits: &[Vec<Vec<f64>>]) -> Self {
        Self {
            pi: logits
                .iter()
                .map(|step| step.iter().map(|row| math::softmax(row)).collect())
                .collect(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.pi.len()
    }

    pub fn row(&self, t: usize, s: usize) -> &[f64] {
        &self.pi[t][s]
    }

    /// Non-negative, finite entries and unit row sums.
    pub fn check_rows(&self) -> Result<()> {
        for (t, step) in self.pi.iter().enumerate() {
            for (s, row) in step.iter().enumerate() {
                if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                    return Err(Error::InvalidPolicy {
                        t,
                        state: s,
                        reason: format!("entries outside [0, 1]: {row:?}"),
                    });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_TOL {
                    return Err(Error::InvalidPolicy {
                        t,
                        state: s,
                        reason: format!("row sum {sum} ≠ 1"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Shape check against an MDP plus [`Policy::check_rows`].
    pub fn check_for(&self, mdp: &TabularMdp) -> Result<()> {
        let shape_ok = self.pi.len() == mdp.horizon()
            && self.pi.iter().all(|step| {
                step.len() == mdp.num_states()
                    && step.iter().all(|row| row.len() == mdp.num_actions())
            });
        if !shape_ok {
            return Err(Error::InvalidArgument(format!(
                "policy shape does not match T={}, S={}, A={}",
                mdp.horizon(),
                mdp.num_states(),
                mdp.num_actions()
            )));
        }
        self.check_rows()
    }
}

/// `mu[t][s]`: probability of being in `s` at step `t` when `s_0 ~ initial`
/// and actions follow `policy`.
pub fn state_marginals(mdp: &TabularMdp, policy: &Policy, initial: &[f64]) -> Vec<Vec<f64>> {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mut out = Vec::with_capacity(mdp.horizon());
    let mut mu = initial.to_vec();
    for t in 0..mdp.horizon() {
        let mut next = vec![0.0; ns];
        if t + 1 < mdp.horizon() {
            for s in 0..ns {
                if mu[s] == 0.0 {
                    continue;
                }
                for a in 0..na {
                    let w = mu[s] * policy.pi[t][s][a];
                    if w == 0.0 {
                        continue;
                    }
                    for (sp, p) in mdp.next_dist(s, a).iter().enumerate() {
                        next[sp] += w * p;
                    }
                }
            }
        }
        out.push(std::mem::replace(&mut mu, next));
    }
    out
}

/// `d[t][s][a] = mu[t][s] · π_t(a|s)`; each time slice sums to one.
pub fn state_action_marginals(
    mdp: &TabularMdp,
    policy: &Policy,
    initial: &[f64],
) -> Vec<Vec<Vec<f64>>> {
    state_marginals(mdp, policy, initial)
        .iter()
        .enumerate()
        .map(|(t, mu)| {
            mu.iter()
                .enumerate()
                .map(|(s, &m)| policy.pi[t][s].iter().map(|p| m * p).collect())
                .collect()
        })
        .collect()
}
