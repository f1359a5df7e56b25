use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{zeros3, EstimatorKind, GradientEstimate, PolicyParams, Table2, Table3};
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::oracle::maxent_objective_by_decomposition;
use crate::policy::{state_marginals, Policy};
use crate::soft::soft_policy_evaluation;

/// Trajectories per RNG stream in Monte Carlo mode.
const CHUNK: usize = 4096;

/// Gradient of `Σ_t E[r + H(π_t)]` with respect to the logits.
///
/// Both modes estimate `Σ_t E[∇ log π(a_t|s_t) (Σ_{t'≥t} (r − log π) − b(s_t))]`.
/// Exact mode takes the expectation over forward marginals; Monte Carlo mode
/// averages `num_samples` sampled trajectories. `baseline` defaults to zero.
pub fn maxent_policy_gradient(
    mdp: &TabularMdp,
    params: &PolicyParams,
    baseline: Option<&Table2>,
    mode: EstimatorKind,
    num_samples: usize,
    seed: u64,
) -> Result<GradientEstimate> {
    let zero_baseline;
    let baseline = match baseline {
        Some(b) => {
            let ok = b.len() == mdp.horizon() && b.iter().all(|row| row.len() == mdp.num_states());
            if !ok || b.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(
                    "baseline must be a finite T×S table".into(),
                ));
            }
            b
        }
        None => {
            zero_baseline = vec![vec![0.0; mdp.num_states()]; mdp.horizon()];
            &zero_baseline
        }
    };
    if params.logits.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("logits must be finite".into()));
    }
    let policy = params.policy();
    policy.check_for(mdp)?;
    match mode {
        EstimatorKind::ExactExpectation => Ok(GradientEstimate {
            wrt_logits: exact_gradient(mdp, &policy, baseline)?,
            estimator_kind: mode,
            num_samples: 0,
            std_error: None,
        }),
        EstimatorKind::MonteCarlo => {
            if num_samples == 0 {
                return Err(Error::InvalidArgument(
                    "monte-carlo mode needs at least one sample".into(),
                ));
            }
            let (mean, se) = monte_carlo_gradient(mdp, &policy, baseline, num_samples, seed);
            Ok(GradientEstimate {
                wrt_logits: mean,
                estimator_kind: mode,
                num_samples,
                std_error: Some(se),
            })
        }
    }
}

fn exact_gradient(mdp: &TabularMdp, policy: &Policy, baseline: &Table2) -> Result<Table3> {
    // E[Σ_{t'≥t} (r − log π) | s_t, a_t] = q^π_t(s,a) − log π_t(a|s).
    let eval = soft_policy_evaluation(mdp, policy)?;
    let mu = state_marginals(mdp, policy, mdp.initial_dist());
    let mut grad = zeros3(mdp);
    for t in 0..mdp.horizon() {
        for s in 0..mdp.num_states() {
            if mu[t][s] == 0.0 {
                continue;
            }
            let pi = policy.row(t, s);
            for (a, &p) in pi.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let weight = mu[t][s] * p * (eval.q[t][s][a] - p.ln() - baseline[t][s]);
                for (b, g) in grad[t][s].iter_mut().enumerate() {
                    let score = (a == b) as u8 as f64 - pi[b];
                    *g += weight * score;
                }
            }
        }
    }
    Ok(grad)
}

fn sample_index<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left `u` above the cumulative sum; take the last supported entry.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

struct Moments {
    sum: Table3,
    sum_sq: Table3,
}

fn sample_chunk(
    mdp: &TabularMdp,
    policy: &Policy,
    baseline: &Table2,
    count: usize,
    seed: u64,
    stream: u64,
) -> Moments {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let horizon = mdp.horizon();
    let mut sum = zeros3(mdp);
    let mut sum_sq = zeros3(mdp);
    let mut states = vec![0; horizon];
    let mut actions = vec![0; horizon];
    let mut modified = vec![0.0; horizon];
    for _ in 0..count {
        let mut s = sample_index(&mut rng, mdp.initial_dist());
        for t in 0..horizon {
            let a = sample_index(&mut rng, policy.row(t, s));
            states[t] = s;
            actions[t] = a;
            modified[t] = mdp.reward(s, a) - policy.pi[t][s][a].ln();
            if t + 1 < horizon {
                s = sample_index(&mut rng, mdp.next_dist(s, a));
            }
        }
        let mut to_go = 0.0;
        for t in (0..horizon).rev() {
            to_go += modified[t];
            let (s, a) = (states[t], actions[t]);
            let advantage = to_go - baseline[t][s];
            let pi = policy.row(t, s);
            for b in 0..pi.len() {
                let g = ((a == b) as u8 as f64 - pi[b]) * advantage;
                sum[t][s][b] += g;
                sum_sq[t][s][b] += g * g;
            }
        }
    }
    Moments { sum, sum_sq }
}

fn monte_carlo_gradient(
    mdp: &TabularMdp,
    policy: &Policy,
    baseline: &Table2,
    num_samples: usize,
    seed: u64,
) -> (Table3, Table3) {
    let chunks = num_samples.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(num_samples - c * CHUNK);
            sample_chunk(mdp, policy, baseline, count, seed, c as u64)
        })
        .collect();

    let mut sum = zeros3(mdp);
    let mut sum_sq = zeros3(mdp);
    for part in &parts {
        for ((dst, dst_sq), (src, src_sq)) in sum
            .iter_mut()
            .flatten()
            .flatten()
            .zip(sum_sq.iter_mut().flatten().flatten())
            .zip(part.sum.iter().flatten().flatten().zip(part.sum_sq.iter().flatten().flatten()))
        {
            *dst += src;
            *dst_sq += src_sq;
        }
    }

    let n = num_samples as f64;
    let mut se = zeros3(mdp);
    for ((m, sq), e) in sum
        .iter_mut()
        .flatten()
        .flatten()
        .zip(sum_sq.iter().flatten().flatten())
        .zip(se.iter_mut().flatten().flatten())
    {
        *m /= n;
        let var = if num_samples > 1 {
            ((sq / n - *m * *m) * n / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        *e = (var / n).sqrt();
    }
    (sum, se)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgRecord {
    pub iteration: usize,
    pub objective: f64,
    pub grad_max_abs: f64,
}

/// Plain gradient ascent on the logits. Monte Carlo mode draws a fresh batch
/// per iteration from a seed derived from `seed` and the iteration number.
pub fn train_policy_gradient(
    mdp: &TabularMdp,
    init: PolicyParams,
    rate: f64,
    iters: usize,
    mode: EstimatorKind,
    num_samples: usize,
    seed: u64,
) -> Result<(PolicyParams, Vec<PgRecord>)> {
    if !(rate > 0.0) || iters == 0 {
        return Err(Error::InvalidArgument(
            "policy gradient needs rate > 0 and iters >= 1".into(),
        ));
    }
    let mut params = init;
    let mut curve = Vec::with_capacity(iters);
    for iteration in 0..iters {
        let grad = maxent_policy_gradient(
            mdp,
            &params,
            None,
            mode,
            num_samples,
            seed.wrapping_add(iteration as u64),
        )?;
        let objective = maxent_objective_by_decomposition(mdp, &params.policy())?;
        if !objective.is_finite() {
            return Err(Error::Divergence(format!(
                "objective became non-finite at iteration {iteration}"
            )));
        }
        curve.push(PgRecord {
            iteration,
            objective,
            grad_max_abs: grad.max_abs(),
        });
        for (x, g) in params
            .logits
            .iter_mut()
            .flatten()
            .flatten()
            .zip(grad.wrt_logits.iter().flatten().flatten())
        {
            *x += rate * g;
        }
    }
    Ok((params, curve))
}
