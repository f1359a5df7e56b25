use super::{CriticParams, Table3};
use crate::error::{Error, Result};
use crate::math::logsumexp;
use crate::mdp::TabularMdp;
use crate::soft::soft_bellman_backup;

fn backup_targets(mdp: &TabularMdp, q_next: Option<&[Vec<f64>]>, hard: bool) -> Vec<Vec<f64>> {
    match q_next {
        None => mdp.rewards().to_vec(),
        Some(q) => {
            let v: Vec<f64> = q
                .iter()
                .map(|row| {
                    if hard {
                        row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                    } else {
                        logsumexp(row)
                    }
                })
                .collect();
            soft_bellman_backup(mdp, &v)
        }
    }
}

/// `r(s,a) + E_{s'}[logsumexp_{a'} q_next(s',a')]`; just `r` after the last step.
pub fn soft_q_target(mdp: &TabularMdp, q_next: Option<&[Vec<f64>]>) -> Vec<Vec<f64>> {
    backup_targets(mdp, q_next, false)
}

/// The Q-learning target with a hard max over next actions.
pub fn hard_q_target(mdp: &TabularMdp, q_next: Option<&[Vec<f64>]>) -> Vec<Vec<f64>> {
    backup_targets(mdp, q_next, true)
}

/// Expected soft Q-learning on a tabular `q_table`.
///
/// Each sweep walks `t` from the last step back to the first and moves every
/// entry toward its target, `φ ← φ + rate (target − φ)`, with the target read
/// from the already-updated `φ[t+1]`. At `rate = 1` one sweep is soft value
/// iteration. `v_table` of the result is `logsumexp` of the final `q_table`.
pub fn soft_q_learning(
    mdp: &TabularMdp,
    init: &Table3,
    rate: f64,
    sweeps: usize,
) -> Result<CriticParams> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "soft Q-learning rate must lie in (0, 1], got {rate}"
        )));
    }
    if sweeps == 0 {
        return Err(Error::InvalidArgument("sweeps must be >= 1".into()));
    }
    let shape_ok = init.len() == mdp.horizon()
        && init
            .iter()
            .all(|step| step.len() == mdp.num_states() && step.iter().all(|r| r.len() == mdp.num_actions()));
    if !shape_ok {
        return Err(Error::InvalidArgument("initial q_table has the wrong shape".into()));
    }

    let horizon = mdp.horizon();
    let mut q = init.clone();
    for _ in 0..sweeps {
        for t in (0..horizon).rev() {
            let target = soft_q_target(mdp, q.get(t + 1).map(Vec::as_slice));
            for (row, target_row) in q[t].iter_mut().zip(&target) {
                for (x, y) in row.iter_mut().zip(target_row) {
                    *x += rate * (y - *x);
                }
            }
        }
    }
    if q.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Divergence("soft Q-learning produced non-finite values".into()));
    }
    let v_table = q
        .iter()
        .map(|step| step.iter().map(|row| logsumexp(row)).collect())
        .collect();
    Ok(CriticParams {
        q_table: q,
        v_table,
    })
}
