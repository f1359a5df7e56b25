//! Maximum-entropy inverse RL with a linear reward `r(s,a) = φᵀ f(s,a)`.
//!
//! The likelihood of a demonstration is the product of the max-ent policy's
//! action probabilities at the demonstrated states, with the policy obtained
//! by soft value iteration under the current weights.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{TabularMdp, Trajectory};
use crate::policy::{state_action_marginals, Policy};
use crate::soft::{extract_policy, soft_value_iteration};

/// `features[s][a]` is a length-`d` vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureMap {
    pub features: Vec<Vec<Vec<f64>>>,
}

impl FeatureMap {
    pub fn new(features: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let d = features
            .first()
            .and_then(|row| row.first())
            .map_or(0, Vec::len);
        if d == 0 {
            return Err(Error::InvalidArgument("feature dimension must be positive".into()));
        }
        if features.iter().flatten().any(|f| f.len() != d) {
            return Err(Error::InvalidArgument("ragged feature map".into()));
        }
        if features.iter().flatten().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("feature entries must be finite".into()));
        }
        Ok(Self { features })
    }

    /// One indicator per state-action pair, `d = S·A`.
    pub fn one_hot(num_states: usize, num_actions: usize) -> Self {
        let d = num_states * num_actions;
        let features = (0..num_states)
            .map(|s| {
                (0..num_actions)
                    .map(|a| {
                        let mut f = vec![0.0; d];
                        f[s * num_actions + a] = 1.0;
                        f
                    })
                    .collect()
            })
            .collect();
        Self { features }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let features = read_json(path.as_ref())?;
        Self::new(features)
    }

    pub fn dim(&self) -> usize {
        self.features[0][0].len()
    }

    fn check_for(&self, mdp: &TabularMdp) -> Result<()> {
        let ok = self.features.len() == mdp.num_states()
            && self.features.iter().all(|row| row.len() == mdp.num_actions());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "feature map must be [{}][{}][d]",
                mdp.num_states(),
                mdp.num_actions()
            )))
        }
    }

    /// `φᵀ f(s,a)` for every pair.
    pub fn reward(&self, weights: &RewardParams) -> Result<Vec<Vec<f64>>> {
        if weights.weights.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "weights have length {}, features have dimension {}",
                weights.weights.len(),
                self.dim()
            )));
        }
        Ok(self
            .features
            .iter()
            .map(|row| {
                row.iter()
                    .map(|f| f.iter().zip(&weights.weights).map(|(x, w)| x * w).sum())
                    .collect()
            })
            .collect())
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    pub weights: Vec<f64>,
}

impl RewardParams {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
        }
    }
}

/// Demonstrations: sampled trajectories, or an exact per-step state-action
/// occupancy (each time slice a distribution).
#[derive(Debug, Clone, PartialEq)]
pub enum DemoSet {
    Trajectories(Vec<Trajectory>),
    ExactVisitation(Vec<Vec<Vec<f64>>>),
}

impl DemoSet {
    pub fn load_trajectories(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::Trajectories(read_json(path.as_ref())?))
    }
}

/// Demonstration counts `counts[t][s][a]` and the number of demonstrations.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoOccupancy {
    pub counts: Vec<Vec<Vec<f64>>>,
    pub num_demos: f64,
}

impl DemoOccupancy {
    /// Empirical distribution of the first state.
    pub fn initial_state_dist(&self) -> Vec<f64> {
        self.counts[0]
            .iter()
            .map(|row| row.iter().sum::<f64>() / self.num_demos)
            .collect()
    }
}

/// Checks the demonstrations against the MDP and tallies them.
pub fn ingest_demos(mdp: &TabularMdp, demos: &DemoSet) -> Result<DemoOccupancy> {
    let (ns, na, horizon) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
    match demos {
        DemoSet::Trajectories(trajs) => {
            if trajs.is_empty() {
                return Err(Error::InvalidDemos("no demonstrations".into()));
            }
            let mut counts = vec![vec![vec![0.0; na]; ns]; horizon];
            for (i, tau) in trajs.iter().enumerate() {
                tau.check_indices(mdp)
                    .map_err(|e| Error::InvalidDemos(format!("demo {i}: {e}")))?;
                if !tau.is_feasible(mdp) {
                    return Err(Error::InvalidDemos(format!(
                        "demo {i} uses a zero-probability transition or start state"
                    )));
                }
                for (t, (s, a)) in tau.steps().enumerate() {
                    counts[t][s][a] += 1.0;
                }
            }
            Ok(DemoOccupancy {
                counts,
                num_demos: trajs.len() as f64,
            })
        }
        DemoSet::ExactVisitation(occ) => {
            let shape_ok = occ.len() == horizon
                && occ
                    .iter()
                    .all(|step| step.len() == ns && step.iter().all(|row| row.len() == na));
            if !shape_ok {
                return Err(Error::InvalidDemos(format!(
                    "visitation must be [{horizon}][{ns}][{na}]"
                )));
            }
            if occ.iter().flatten().flatten().any(|&x| !(x >= 0.0 && x.is_finite())) {
                return Err(Error::InvalidDemos("visitation entries must be non-negative".into()));
            }
            for (t, step) in occ.iter().enumerate() {
                let total: f64 = step.iter().flatten().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidDemos(format!(
                        "visitation slice {t} sums to {total}, not 1"
                    )));
                }
            }
            Ok(DemoOccupancy {
                counts: occ.clone(),
                num_demos: 1.0,
            })
        }
    }
}

/// Max-ent policy under `r = φᵀ f` on the MDP's dynamics.
pub fn maxent_policy(mdp: &TabularMdp, features: &FeatureMap, weights: &RewardParams) -> Result<Policy> {
    features.check_for(mdp)?;
    let reward = features.reward(weights)?;
    if reward.iter().flatten().any(|r| !r.is_finite()) {
        return Err(Error::Divergence("reward became non-finite".into()));
    }
    let mdp = mdp.with_reward(reward)?;
    Ok(extract_policy(&soft_value_iteration(&mdp)))
}

fn log_likelihood_of(policy: &Policy, occ: &DemoOccupancy) -> f64 {
    let mut total = 0.0;
    for (t, step) in occ.counts.iter().enumerate() {
        for (s, row) in step.iter().enumerate() {
            for (a, &c) in row.iter().enumerate() {
                if c > 0.0 {
                    total += c * policy.pi[t][s][a].ln();
                }
            }
        }
    }
    total
}

/// `Σ_i Σ_t log π_φ(a_t | s_t)`, occupancy-weighted for exact visitations.
pub fn irl_log_likelihood(
    mdp: &TabularMdp,
    features: &FeatureMap,
    weights: &RewardParams,
    demos: &DemoSet,
) -> Result<f64> {
    let occ = ingest_demos(mdp, demos)?;
    let policy = maxent_policy(mdp, features, weights)?;
    Ok(log_likelihood_of(&policy, &occ))
}

/// `G_t(s,a)`: expected feature sum from step `t` on, taking `a` at `s` and
/// following `policy` afterwards.
fn feature_q(mdp: &TabularMdp, features: &FeatureMap, policy: &Policy) -> Vec<Vec<Vec<Vec<f64>>>> {
    let (ns, na, d) = (mdp.num_states(), mdp.num_actions(), features.dim());
    let horizon = mdp.horizon();
    let mut g = vec![vec![vec![vec![0.0; d]; na]; ns]; horizon];
    let mut f_next = vec![vec![0.0; d]; ns];
    for t in (0..horizon).rev() {
        for s in 0..ns {
            for a in 0..na {
                let mut acc = features.features[s][a].clone();
                if t + 1 < horizon {
                    for (sp, &p) in mdp.next_dist(s, a).iter().enumerate() {
                        if p > 0.0 {
                            for (x, y) in acc.iter_mut().zip(&f_next[sp]) {
                                *x += p * y;
                            }
                        }
                    }
                }
                g[t][s][a] = acc;
            }
        }
        f_next = (0..ns)
            .map(|s| {
                let mut acc = vec![0.0; d];
                for (a, p) in policy.row(t, s).iter().enumerate() {
                    for (x, y) in acc.iter_mut().zip(&g[t][s][a]) {
                        *x += p * y;
                    }
                }
                acc
            })
            .collect();
    }
    g
}

fn gradient_of(
    mdp: &TabularMdp,
    features: &FeatureMap,
    policy: &Policy,
    occ: &DemoOccupancy,
) -> Vec<f64> {
    // ∂ log π_t(a|s) = G_t(s,a) − Σ_b π_t(b|s) G_t(s,b)
    let g = feature_q(mdp, features, policy);
    let d = features.dim();
    let mut grad = vec![0.0; d];
    for (t, step) in occ.counts.iter().enumerate() {
        for (s, row) in step.iter().enumerate() {
            let weight: f64 = row.iter().sum();
            if weight == 0.0 {
                continue;
            }
            for (a, &c) in row.iter().enumerate() {
                if c > 0.0 {
                    for (x, y) in grad.iter_mut().zip(&g[t][s][a]) {
                        *x += c * y;
                    }
                }
            }
            for (b, p) in policy.row(t, s).iter().enumerate() {
                for (x, y) in grad.iter_mut().zip(&g[t][s][b]) {
                    *x -= weight * p * y;
                }
            }
        }
    }
    grad
}

/// Exact gradient of [`irl_log_likelihood`] with respect to the weights.
///
/// When the demonstrated state occupancies are consistent with the dynamics
/// (exact visitations, or any demos under deterministic dynamics) this is the
/// moment-matching difference `demo features − model features`, with the model
/// started from the demos' initial-state distribution.
pub fn irl_gradient(
    mdp: &TabularMdp,
    features: &FeatureMap,
    weights: &RewardParams,
    demos: &DemoSet,
) -> Result<Vec<f64>> {
    let occ = ingest_demos(mdp, demos)?;
    let policy = maxent_policy(mdp, features, weights)?;
    Ok(gradient_of(mdp, features, &policy, &occ))
}

/// Summed feature counts of the demonstrations, divided by the number of demos.
pub fn demo_feature_expectations(
    mdp: &TabularMdp,
    features: &FeatureMap,
    demos: &DemoSet,
) -> Result<Vec<f64>> {
    features.check_for(mdp)?;
    let occ = ingest_demos(mdp, demos)?;
    let mut out = vec![0.0; features.dim()];
    for step in &occ.counts {
        for (s, row) in step.iter().enumerate() {
            for (a, &c) in row.iter().enumerate() {
                for (x, y) in out.iter_mut().zip(&features.features[s][a]) {
                    *x += c * y / occ.num_demos;
                }
            }
        }
    }
    Ok(out)
}

/// Expected feature counts of `π_φ` started from `initial`.
pub fn model_feature_expectations(
    mdp: &TabularMdp,
    features: &FeatureMap,
    weights: &RewardParams,
    initial: &[f64],
) -> Result<Vec<f64>> {
    let policy = maxent_policy(mdp, features, weights)?;
    let d = state_action_marginals(mdp, &policy, initial);
    let mut out = vec![0.0; features.dim()];
    for step in &d {
        for (s, row) in step.iter().enumerate() {
            for (a, &m) in row.iter().enumerate() {
                for (x, y) in out.iter_mut().zip(&features.features[s][a]) {
                    *x += m * y;
                }
            }
        }
    }
    Ok(out)
}

/// Per-step state-action occupancy of `policy` from the MDP's initial
/// distribution; usable directly as [`DemoSet::ExactVisitation`].
pub fn exact_visitation(mdp: &TabularMdp, policy: &Policy) -> Vec<Vec<Vec<f64>>> {
    state_action_marginals(mdp, policy, mdp.initial_dist())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrlFitOptions {
    pub rate: f64,
    pub iters: usize,
    /// Penalty `l2/2 · ‖φ‖²` subtracted from the likelihood.
    pub l2: f64,
    /// Stop once the gradient max-norm falls below this.
    pub grad_tol: f64,
}

impl Default for IrlFitOptions {
    fn default() -> Self {
        Self {
            rate: 1.0,
            iters: 1000,
            l2: 0.0,
            grad_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrlIteration {
    pub iteration: usize,
    pub objective: f64,
    pub step: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrlFitReport {
    /// Objective at the start (iteration 0) and after each accepted step.
    pub curve: Vec<IrlIteration>,
    pub final_grad_norm: f64,
}

/// Backtracking gives up (and the fit stops) after this many halvings.
const MAX_HALVINGS: usize = 60;

/// Gradient ascent from `φ = 0`, halving the step until the objective does
/// not decrease.
pub fn irl_fit(
    mdp: &TabularMdp,
    features: &FeatureMap,
    demos: &DemoSet,
    options: IrlFitOptions,
) -> Result<(RewardParams, IrlFitReport)> {
    if !(options.rate > 0.0) || options.iters == 0 || !(options.l2 >= 0.0) {
        return Err(Error::InvalidArgument(
            "irl_fit needs rate > 0, iters >= 1 and l2 >= 0".into(),
        ));
    }
    features.check_for(mdp)?;
    let occ = ingest_demos(mdp, demos)?;

    let evaluate = |w: &RewardParams| -> Result<(f64, Vec<f64>)> {
        let policy = maxent_policy(mdp, features, w)?;
        let penalty: f64 = 0.5 * options.l2 * w.weights.iter().map(|x| x * x).sum::<f64>();
        let objective = log_likelihood_of(&policy, &occ) - penalty;
        if !objective.is_finite() {
            return Err(Error::Divergence(format!(
                "non-finite likelihood at weights {:?}",
                w.weights
            )));
        }
        let mut grad = gradient_of(mdp, features, &policy, &occ);
        for (g, x) in grad.iter_mut().zip(&w.weights) {
            *g -= options.l2 * x;
        }
        Ok((objective, grad))
    };
    let norm = |g: &[f64]| g.iter().fold(0.0, |m: f64, x| m.max(x.abs()));

    let mut weights = RewardParams::zeros(features.dim());
    let (mut objective, mut grad) = evaluate(&weights)?;
    let mut curve = vec![IrlIteration {
        iteration: 0,
        objective,
        step: 0.0,
        grad_norm: norm(&grad),
    }];

    for iteration in 1..=options.iters {
        if norm(&grad) < options.grad_tol {
            break;
        }
        let mut step = options.rate;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let candidate = RewardParams {
                weights: weights
                    .weights
                    .iter()
                    .zip(&grad)
                    .map(|(w, g)| w + step * g)
                    .collect(),
            };
            match evaluate(&candidate) {
                Ok((value, g)) if value >= objective => {
                    accepted = Some((candidate, value, g));
                    break;
                }
                // A non-finite trial point is treated like a decrease.
                Ok(_) | Err(Error::Divergence(_)) => step *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let Some((candidate, value, g)) = accepted else {
            break;
        };
        weights = candidate;
        objective = value;
        grad = g;
        curve.push(IrlIteration {
            iteration,
            objective,
            step,
            grad_norm: norm(&grad),
        });
    }
    Ok((
        weights,
        IrlFitReport {
            final_grad_norm: norm(&grad),
            curve,
        },
    ))
}
