//! Max-ent learners at tabular scale. Every parameter is one table entry, so
//! each fixed point can be checked against [`crate::soft`] exactly.

mod actor_critic;
mod equivalence;
mod policy_gradient;
mod soft_q;

use serde::{Deserialize, Serialize};

use crate::mdp::TabularMdp;
use crate::policy::Policy;

pub use actor_critic::{
    actor_critic_step, critic_losses, critic_only_step, train_actor_critic, ActorCriticCurve,
    ActorCriticRecord,
};
pub use equivalence::{sql_pg_equivalence_check, sql_pg_gradients, EquivalenceGradients};
pub use policy_gradient::{maxent_policy_gradient, train_policy_gradient, PgRecord};
pub use soft_q::{hard_q_target, soft_q_learning, soft_q_target};

/// `T×S×A` table.
pub type Table3 = Vec<Vec<Vec<f64>>>;
/// `T×S` table.
pub type Table2 = Vec<Vec<f64>>;

/// Policy logits; the policy is the row-wise softmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub logits: Table3,
}

impl PolicyParams {
    pub fn zeros(mdp: &TabularMdp) -> Self {
        Self {
            logits: zeros3(mdp),
        }
    }

    /// Logits equal to `log π`, so that `softmax(logits) = π` on rows with full support.
    pub fn from_policy(policy: &Policy) -> Self {
        Self {
            logits: policy
                .pi
                .iter()
                .map(|step| {
                    step.iter()
                        .map(|row| row.iter().map(|p| p.ln()).collect())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn policy(&self) -> Policy {
        Policy::from_logits(&self.logits)
    }
}

/// Tabular critic: `q_table` holds Q_φ, `v_table` holds V_ψ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticParams {
    pub q_table: Table3,
    pub v_table: Table2,
}

impl CriticParams {
    pub fn zeros(mdp: &TabularMdp) -> Self {
        Self {
            q_table: zeros3(mdp),
            v_table: vec![vec![0.0; mdp.num_states()]; mdp.horizon()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    ExactExpectation,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub wrt_logits: Table3,
    pub estimator_kind: EstimatorKind,
    pub num_samples: usize,
    /// Per-entry standard error of the Monte Carlo mean; `None` in exact mode.
    pub std_error: Option<Table3>,
}

impl GradientEstimate {
    pub fn max_abs(&self) -> f64 {
        self.wrt_logits
            .iter()
            .flatten()
            .flatten()
            .fold(0.0, |m, x| f64::max(m, x.abs()))
    }
}

pub(crate) fn zeros3(mdp: &TabularMdp) -> Table3 {
    vec![vec![vec![0.0; mdp.num_actions()]; mdp.num_states()]; mdp.horizon()]
}

/// `V_{t+1}` with the convention that the value after the last step is zero.
pub(crate) fn next_values(table: &[Vec<f64>], t: usize, num_states: usize) -> Vec<f64> {
    table
        .get(t + 1)
        .cloned()
        .unwrap_or_else(|| vec![0.0; num_states])
}
