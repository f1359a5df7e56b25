//! Finite-horizon tabular MDPs, their validation, and the two model transforms
//! (temperature scaling and discount-as-absorbing-state).
//!
//! Time indices are zero-based throughout the crate: a horizon-`T` problem has
//! steps `t = 0..T`, and a trajectory is `(s_0, a_0, ..., s_{T-1}, a_{T-1})`.
//! Dynamics factors apply between consecutive steps only; the state reached
//! after the last action is marginalized out (it carries no reward).

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for row sums of the transition tensor and the initial distribution.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Raw MDP description, exactly as it appears in an MDP JSON file.
///
/// Nothing is checked here; see [`validate_mdp`] and [`TabularMdp::new`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpDescription {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub initial_dist: Vec<f64>,
    /// `transition[s][a][s']` = p(s' | s, a).
    pub transition: Vec<Vec<Vec<f64>>>,
    /// `reward[s][a]` = r(s, a).
    pub reward: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    Dimension,
    RowSum,
    Probability,
    NonFiniteReward,
    InitialSum,
}

/// One failed invariant, with the offending index and the measured residual.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub location: String,
    pub residual: f64,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    fn push(&mut self, kind: ViolationKind, location: String, residual: f64, message: String) {
        self.violations.push(Violation {
            kind,
            location,
            residual,
            message,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks every invariant of a tabular MDP and reports each violation.
pub fn validate_mdp(desc: &MdpDescription) -> ValidationReport {
    let mut report = ValidationReport::default();
    let (ns, na) = (desc.num_states, desc.num_actions);

    if ns == 0 || na == 0 || desc.horizon == 0 {
        report.push(
            ViolationKind::Dimension,
            "dimensions".into(),
            0.0,
            format!(
                "num_states={}, num_actions={}, horizon={} must all be positive",
                ns, na, desc.horizon
            ),
        );
        return report;
    }
    if desc.initial_dist.len() != ns {
        report.push(
            ViolationKind::Dimension,
            "initial_dist".into(),
            desc.initial_dist.len() as f64,
            format!("length {} != num_states {}", desc.initial_dist.len(), ns),
        );
    }
    if desc.transition.len() != ns || desc.transition.iter().any(|row| row.len() != na) {
        report.push(
            ViolationKind::Dimension,
            "transition".into(),
            0.0,
            format!("shape must be [{ns}][{na}][{ns}]"),
        );
    }
    if desc.reward.len() != ns || desc.reward.iter().any(|row| row.len() != na) {
        report.push(
            ViolationKind::Dimension,
            "reward".into(),
            0.0,
            format!("shape must be [{ns}][{na}]"),
        );
    }
    if !report.is_empty() {
        return report;
    }

    for (s, rows) in desc.transition.iter().enumerate() {
        for (a, row) in rows.iter().enumerate() {
            if row.len() != ns {
                report.push(
                    ViolationKind::Dimension,
                    format!("transition[{s}][{a}]"),
                    row.len() as f64,
                    format!("length {} != num_states {}", row.len(), ns),
                );
                continue;
            }
            for (sp, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    report.push(
                        ViolationKind::Probability,
                        format!("transition[{s}][{a}][{sp}]"),
                        p,
                        format!("probability {p} outside [0, 1]"),
                    );
                }
            }
            let sum: f64 = row.iter().sum();
            if !((sum - 1.0).abs() <= STOCHASTIC_TOL) {
                report.push(
                    ViolationKind::RowSum,
                    format!("transition[{s}][{a}]"),
                    sum - 1.0,
                    format!("row sum {sum} ≠ 1"),
                );
            }
        }
    }

    for (s, &p) in desc.initial_dist.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            report.push(
                ViolationKind::Probability,
                format!("initial_dist[{s}]"),
                p,
                format!("probability {p} outside [0, 1]"),
            );
        }
    }
    let init_sum: f64 = desc.initial_dist.iter().sum();
    if !((init_sum - 1.0).abs() <= STOCHASTIC_TOL) {
        report.push(
            ViolationKind::InitialSum,
            "initial_dist".into(),
            init_sum - 1.0,
            format!("sum {init_sum} ≠ 1"),
        );
    }

    for (s, row) in desc.reward.iter().enumerate() {
        for (a, &r) in row.iter().enumerate() {
            if !r.is_finite() {
                report.push(
                    ViolationKind::NonFiniteReward,
                    format!("reward[{s}][{a}]"),
                    r,
                    format!("reward {r} at (s={s}, a={a}) is not finite"),
                );
            }
        }
    }
    report
}

/// A validated finite-horizon tabular MDP. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    desc: MdpDescription,
}

impl TabularMdp {
    pub fn new(desc: MdpDescription) -> Result<Self> {
        let report = validate_mdp(&desc);
        if report.is_empty() {
            Ok(Self { desc })
        } else {
            Err(Error::InvalidMdp(report.to_string()))
        }
    }

    pub fn from_parts(
        horizon: usize,
        initial_dist: Vec<f64>,
        transition: Vec<Vec<Vec<f64>>>,
        reward: Vec<Vec<f64>>,
    ) -> Result<Self> {
        Self::new(MdpDescription {
            num_states: initial_dist.len(),
            num_actions: reward.first().map_or(0, Vec::len),
            horizon,
            initial_dist,
            transition,
            reward,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let desc: MdpDescription = serde_json::from_str(text)
            .map_err(|e| Error::InvalidMdp(format!("malformed MDP JSON: {e}")))?;
        Self::new(desc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn num_states(&self) -> usize {
        self.desc.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.desc.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.desc.horizon
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.desc.initial_dist
    }

    /// p(· | s, a)
    pub fn next_dist(&self, s: usize, a: usize) -> &[f64] {
        &self.desc.transition[s][a]
    }

    pub fn transition(&self) -> &[Vec<Vec<f64>>] {
        &self.desc.transition
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.desc.reward[s][a]
    }

    pub fn rewards(&self) -> &[Vec<f64>] {
        &self.desc.reward
    }

    pub fn description(&self) -> &MdpDescription {
        &self.desc
    }

    pub fn into_description(self) -> MdpDescription {
        self.desc
    }

    /// True when every transition row puts all of its mass on one successor.
    pub fn is_deterministic(&self) -> bool {
        self.desc
            .transition
            .iter()
            .flatten()
            .all(|row| row.iter().filter(|&&p| p > 0.0).count() == 1 && row.contains(&1.0))
    }

    /// Same dynamics and horizon, different reward table.
    pub fn with_reward(&self, reward: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(MdpDescription {
            reward,
            ..self.desc.clone()
        })
    }

    /// Same dynamics and rewards, different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        Self::new(MdpDescription {
            horizon,
            ..self.desc.clone()
        })
    }

    pub fn with_initial_dist(&self, initial_dist: Vec<f64>) -> Result<Self> {
        Self::new(MdpDescription {
            initial_dist,
            ..self.desc.clone()
        })
    }

    pub(crate) fn check_state(&self, s: usize) -> Result<()> {
        if s < self.num_states() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange(format!(
                "state {s} >= num_states {}",
                self.num_states()
            )))
        }
    }

    pub(crate) fn check_action(&self, a: usize) -> Result<()> {
        if a < self.num_actions() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange(format!(
                "action {a} >= num_actions {}",
                self.num_actions()
            )))
        }
    }
}

impl TryFrom<MdpDescription> for TabularMdp {
    type Error = Error;

    fn try_from(desc: MdpDescription) -> Result<Self> {
        Self::new(desc)
    }
}

/// Solver-wide knobs. Temperature and discount are applied as MDP transforms
/// before solving; the rest drive iterative solvers and samplers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub temperature: f64,
    pub discount: f64,
    pub convergence_tol: f64,
    pub max_iters: usize,
    pub rng_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            temperature: 1.0,
            discount: 1.0,
            convergence_tol: 1e-10,
            max_iters: 100_000,
            rng_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "temperature must be > 0, got {}",
                self.temperature
            )));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "discount must lie in (0, 1], got {}",
                self.discount
            )));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "convergence_tol must be > 0, got {}",
                self.convergence_tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// `(s_0, a_0, ..., s_{T-1}, a_{T-1})`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
}

impl Trajectory {
    pub fn new(states: Vec<usize>, actions: Vec<usize>) -> Self {
        Self { states, actions }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn steps(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.states.iter().copied().zip(self.actions.iter().copied())
    }

    /// Checks lengths against the horizon and every index against the MDP.
    pub fn check_indices(&self, mdp: &TabularMdp) -> Result<()> {
        if self.states.len() != mdp.horizon() || self.actions.len() != mdp.horizon() {
            return Err(Error::IndexOutOfRange(format!(
                "trajectory has {} states and {} actions, horizon is {}",
                self.states.len(),
                self.actions.len(),
                mdp.horizon()
            )));
        }
        for (s, a) in self.steps() {
            mdp.check_state(s)?;
            mdp.check_action(a)?;
        }
        Ok(())
    }

    pub fn is_feasible(&self, mdp: &TabularMdp) -> bool {
        self.check_indices(mdp).is_ok()
            && trajectory_dynamics_log_prob(mdp, self).is_ok_and(|lp| lp > f64::NEG_INFINITY)
    }
}

impl fmt::Display for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.steps().map(|(s, a)| format!("({s},{a})")).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Adds a zero-reward absorbing state (index `S`) that receives mass `1 - γ`
/// from every original state-action pair.
///
/// `γ = 1` is the identity and is rejected here; callers skip the transform.
pub fn apply_discount_transform(mdp: &TabularMdp, discount: f64) -> Result<TabularMdp> {
    if !(discount > 0.0 && discount < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "discount must lie strictly inside (0, 1), got {discount}"
        )));
    }
    let ns = mdp.num_states();
    let na = mdp.num_actions();
    let absorbing = ns;

    let mut transition = Vec::with_capacity(ns + 1);
    for s in 0..ns {
        let rows = (0..na)
            .map(|a| {
                let mut row: Vec<f64> = mdp.next_dist(s, a).iter().map(|p| discount * p).collect();
                row.push(1.0 - discount);
                row
            })
            .collect();
        transition.push(rows);
    }
    let mut self_loop = vec![0.0; ns + 1];
    self_loop[absorbing] = 1.0;
    transition.push(vec![self_loop; na]);

    let mut reward = mdp.rewards().to_vec();
    reward.push(vec![0.0; na]);
    let mut initial_dist = mdp.initial_dist().to_vec();
    initial_dist.push(0.0);

    TabularMdp::new(MdpDescription {
        num_states: ns + 1,
        num_actions: na,
        horizon: mdp.horizon(),
        initial_dist,
        transition,
        reward,
    })
}

/// Divides every reward by `temperature`.
///
/// Soft values computed on the scaled MDP, multiplied back by `temperature`,
/// are the temperature-`temperature` soft values of the original problem.
pub fn apply_temperature(mdp: &TabularMdp, temperature: f64) -> Result<TabularMdp> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "temperature must be > 0, got {temperature}"
        )));
    }
    let reward = mdp
        .rewards()
        .iter()
        .map(|row| row.iter().map(|r| r / temperature).collect())
        .collect();
    mdp.with_reward(reward)
}

/// `log p(s_0) + Σ_{t<T-1} log p(s_{t+1} | s_t, a_t)`; `-inf` when any factor is zero.
pub fn trajectory_dynamics_log_prob(mdp: &TabularMdp, traj: &Trajectory) -> Result<f64> {
    traj.check_indices(mdp)?;
    let mut lp = mdp.initial_dist()[traj.states[0]].ln();
    for t in 0..traj.len().saturating_sub(1) {
        let p = mdp.next_dist(traj.states[t], traj.actions[t])[traj.states[t + 1]];
        lp += p.ln();
    }
    Ok(lp)
}

/// Sum of rewards along the trajectory.
pub fn trajectory_return(mdp: &TabularMdp, traj: &Trajectory) -> Result<f64> {
    traj.check_indices(mdp)?;
    Ok(traj.steps().map(|(s, a)| mdp.reward(s, a)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_state(row: f64) -> MdpDescription {
        MdpDescription {
            num_states: 1,
            num_actions: 1,
            horizon: 1,
            initial_dist: vec![1.0],
            transition: vec![vec![vec![row]]],
            reward: vec![vec![0.0]],
        }
    }

    fn chain() -> TabularMdp {
        // 0 -> 1 -> 1 under either action, both deterministic.
        TabularMdp::from_parts(
            2,
            vec![1.0, 0.0],
            vec![
                vec![vec![0.0, 1.0], vec![1.0, 0.0]],
                vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            ],
            vec![vec![1.0, 0.0], vec![-10.0, 2.0]],
        )
        .unwrap()
    }

    #[test]
    fn identity_mdp_is_valid() {
        assert!(validate_mdp(&one_state(1.0)).is_empty());
    }

    #[test]
    fn short_row_reports_its_sum() {
        let report = validate_mdp(&one_state(0.9));
        assert_eq!(report.len(), 1);
        let v = &report.violations[0];
        assert_eq!(v.kind, ViolationKind::RowSum);
        assert_eq!(v.location, "transition[0][0]");
        assert!((v.residual + 0.1).abs() < 1e-12);
        assert!(v.message.contains("row sum 0.9 ≠ 1"));
    }

    #[test]
    fn non_finite_reward_names_the_pair() {
        let mut desc = one_state(1.0);
        desc.reward[0][0] = f64::INFINITY;
        let report = validate_mdp(&desc);
        assert_eq!(report.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::NonFiniteReward);
        assert!(report.violations[0].message.contains("(s=0, a=0)"));
        assert!(TabularMdp::new(desc).is_err());
    }

    #[test]
    fn nan_row_is_caught() {
        let report = validate_mdp(&one_state(f64::NAN));
        assert!(!report.is_empty());
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let mut desc = one_state(1.0);
        desc.reward = vec![];
        assert_eq!(validate_mdp(&desc).violations[0].kind, ViolationKind::Dimension);
    }

    #[test]
    fn discount_transform_on_single_state() {
        let mdp = TabularMdp::new(one_state(1.0)).unwrap();
        let out = apply_discount_transform(&mdp, 0.9).unwrap();
        assert_eq!(out.num_states(), 2);
        assert_eq!(out.next_dist(0, 0)[0], 0.9);
        assert!((out.next_dist(0, 0)[1] - 0.1).abs() < 1e-15);
        assert_eq!(out.next_dist(1, 0), &[0.0, 1.0]);
        assert_eq!(out.reward(1, 0), 0.0);
        assert_eq!(out.initial_dist(), &[1.0, 0.0]);
    }

    #[test]
    fn discount_transform_halves_a_chain() {
        let mdp = chain();
        let out = apply_discount_transform(&mdp, 0.5).unwrap();
        for s in 0..2 {
            for a in 0..2 {
                for sp in 0..2 {
                    assert_eq!(out.next_dist(s, a)[sp], 0.5 * mdp.next_dist(s, a)[sp]);
                }
                assert_eq!(out.next_dist(s, a)[2], 0.5);
                assert_eq!(out.reward(s, a), mdp.reward(s, a));
            }
        }
        assert!(validate_mdp(out.description()).is_empty());
    }

    #[test]
    fn discount_outside_open_interval_is_rejected() {
        let mdp = chain();
        for g in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            assert!(apply_discount_transform(&mdp, g).is_err());
        }
    }

    #[test]
    fn temperature_scales_rewards() {
        let mdp = TabularMdp::from_parts(1, vec![1.0], vec![vec![vec![1.0]]], vec![vec![2.0]])
            .unwrap();
        assert_eq!(apply_temperature(&mdp, 1.0).unwrap(), mdp);
        assert_eq!(apply_temperature(&mdp, 2.0).unwrap().reward(0, 0), 1.0);
        assert!(apply_temperature(&mdp, 0.0).is_err());
        assert!(apply_temperature(&mdp, -1.0).is_err());
    }

    #[test]
    fn chain_log_prob_and_return() {
        let mdp = chain();
        let tau = Trajectory::new(vec![0, 1], vec![0, 0]);
        assert_eq!(trajectory_dynamics_log_prob(&mdp, &tau).unwrap(), 0.0);
        assert_eq!(trajectory_return(&mdp, &tau).unwrap(), -9.0);

        let infeasible = Trajectory::new(vec![0, 0], vec![0, 0]);
        assert_eq!(
            trajectory_dynamics_log_prob(&mdp, &infeasible).unwrap(),
            f64::NEG_INFINITY
        );
        assert!(!infeasible.is_feasible(&mdp));
        assert!(tau.is_feasible(&mdp));
    }

    #[test]
    fn half_probabilities_multiply() {
        let mdp = TabularMdp::from_parts(
            2,
            vec![0.5, 0.5],
            vec![vec![vec![0.5, 0.5]], vec![vec![0.0, 1.0]]],
            vec![vec![0.0], vec![0.0]],
        )
        .unwrap();
        let tau = Trajectory::new(vec![0, 1], vec![0, 0]);
        let lp = trajectory_dynamics_log_prob(&mdp, &tau).unwrap();
        assert!((lp - 0.25f64.ln()).abs() < 1e-15);
        assert_eq!(trajectory_return(&mdp, &tau).unwrap(), 0.0);
    }

    #[test]
    fn out_of_range_indices_are_rejected() {
        let mdp = chain();
        let bad_state = Trajectory::new(vec![0, 5], vec![0, 0]);
        let bad_action = Trajectory::new(vec![0, 1], vec![0, 3]);
        let short = Trajectory::new(vec![0], vec![0]);
        for tau in [bad_state, bad_action, short] {
            assert!(matches!(
                trajectory_return(&mdp, &tau),
                Err(Error::IndexOutOfRange(_))
            ));
            assert!(trajectory_dynamics_log_prob(&mdp, &tau).is_err());
        }
    }

    #[test]
    fn json_round_trip_validates_on_load() {
        let mdp = chain();
        let text = serde_json::to_string(mdp.description()).unwrap();
        assert_eq!(TabularMdp::from_json_str(&text).unwrap(), mdp);
        let bad = text.replace("\"horizon\":2", "\"horizon\":2,\"extra\":1");
        assert!(TabularMdp::from_json_str(&bad).is_err());
    }

    #[test]
    fn solver_config_bounds() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            discount: 0.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            temperature: 0.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
