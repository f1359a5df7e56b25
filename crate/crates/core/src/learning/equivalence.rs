//! Soft Q-learning gradient vs. policy gradient plus value Bellman term, for a
//! policy defined implicitly by the Q table: `π = exp(Q − V)`, `V = logsumexp Q`.
//!
//! Both gradients hold the targets `Â = r + E[V(s')]` and the marginals fixed,
//! as a semi-gradient method would.

use super::{next_values, zeros3, CriticParams, Table2, Table3};
use crate::error::{Error, Result};
use crate::math::logsumexp;
use crate::mdp::TabularMdp;
use crate::policy::{state_marginals, Policy};

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceGradients {
    /// `Σ_t E[(∇Q − ∇V) Â] + Σ_t E_s[∇V · E_a[Â]]`
    pub policy_plus_value: Table3,
    /// `Σ_t E[∇Q · (Â − b)]`
    pub soft_q: Table3,
}

impl EquivalenceGradients {
    pub fn max_discrepancy(&self) -> f64 {
        self.policy_plus_value
            .iter()
            .flatten()
            .flatten()
            .zip(self.soft_q.iter().flatten().flatten())
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }
}

/// Both gradients with respect to `critic.q_table`. `sql_baseline`, when
/// given, is subtracted from `Â` on the soft Q-learning side only; the two
/// sides agree only when it is zero.
pub fn sql_pg_gradients(
    mdp: &TabularMdp,
    critic: &CriticParams,
    sql_baseline: Option<&Table2>,
) -> Result<EquivalenceGradients> {
    let (ns, na, horizon) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
    let q = &critic.q_table;
    let shape_ok = q.len() == horizon
        && q.iter().all(|step| step.len() == ns && step.iter().all(|r| r.len() == na));
    if !shape_ok || q.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("q_table must be a finite T×S×A table".into()));
    }

    let v: Table2 = q
        .iter()
        .map(|step| step.iter().map(|row| logsumexp(row)).collect())
        .collect();
    let policy = Policy {
        pi: q
            .iter()
            .zip(&v)
            .map(|(step, vs)| {
                step.iter()
                    .zip(vs)
                    .map(|(row, &vv)| row.iter().map(|x| (x - vv).exp()).collect())
                    .collect()
            })
            .collect(),
    };
    let mu = state_marginals(mdp, &policy, mdp.initial_dist());

    let mut pg = zeros3(mdp);
    let mut sql = zeros3(mdp);
    for t in 0..horizon {
        let v_next = next_values(&v, t, ns);
        for s in 0..ns {
            let m = mu[t][s];
            if m == 0.0 {
                continue;
            }
            let pi = policy.row(t, s);
            let target: Vec<f64> = (0..na)
                .map(|a| {
                    let expected: f64 = mdp
                        .next_dist(s, a)
                        .iter()
                        .zip(&v_next)
                        .filter(|(&p, _)| p > 0.0)
                        .map(|(p, v)| p * v)
                        .sum();
                    mdp.reward(s, a) + expected
                })
                .collect();
            let baseline = sql_baseline.map_or(0.0, |b| b[t][s]);
            let mean_target: f64 = pi.iter().zip(&target).map(|(p, x)| p * x).sum();

            for b in 0..na {
                // ∇_{q[t][s][b]} Q(s,a) = [a = b], ∇_{q[t][s][b]} V(s) = π(b|s)
                let policy_term: f64 = (0..na)
                    .map(|a| m * pi[a] * target[a] * ((a == b) as u8 as f64 - pi[b]))
                    .sum();
                let value_term = m * pi[b] * mean_target;
                pg[t][s][b] = policy_term + value_term;
                sql[t][s][b] = m * pi[b] * (target[b] - baseline);
            }
        }
    }
    Ok(EquivalenceGradients {
        policy_plus_value: pg,
        soft_q: sql,
    })
}

/// Max componentwise gap between the two gradient expressions at zero baseline.
pub fn sql_pg_equivalence_check(mdp: &TabularMdp, critic: &CriticParams) -> Result<f64> {
    Ok(sql_pg_gradients(mdp, critic, None)?.max_discrepancy())
}
