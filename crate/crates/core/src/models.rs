//! Small reference problems and a seeded random-MDP generator.

use rand::Rng;

use crate::mdp::TabularMdp;

/// State and action indices of [`risk_mdp`].
pub mod risk {
    pub const START: usize = 0;
    pub const SAFE_END: usize = 1;
    pub const JACKPOT: usize = 2;
    pub const BUST: usize = 3;

    pub const SAFE: usize = 0;
    pub const RISKY: usize = 1;
}

/// Two-step problem whose exact-inference and variational solutions disagree.
///
/// From the start state, `SAFE` pays 1 and leads to a zero-reward end state;
/// `RISKY` pays 0 and lands on +10 or -10 with equal probability.
pub fn risk_mdp() -> TabularMdp {
    use risk::*;
    let mut transition = vec![vec![vec![0.0; 4]; 2]; 4];
    transition[START][SAFE][SAFE_END] = 1.0;
    transition[START][RISKY][JACKPOT] = 0.5;
    transition[START][RISKY][BUST] = 0.5;
    for s in [SAFE_END, JACKPOT, BUST] {
        for a in [SAFE, RISKY] {
            transition[s][a][s] = 1.0;
        }
    }
    let reward = vec![
        vec![1.0, 0.0],
        vec![0.0, 0.0],
        vec![10.0, 10.0],
        vec![-10.0, -10.0],
    ];
    TabularMdp::from_parts(2, vec![1.0, 0.0, 0.0, 0.0], transition, reward)
        .expect("risk MDP is valid")
}

/// One state, `rewards.len()` actions, horizon 1.
pub fn bandit(rewards: &[f64]) -> TabularMdp {
    let na = rewards.len();
    TabularMdp::from_parts(1, vec![1.0], vec![vec![vec![1.0]; na]], vec![rewards.to_vec()])
        .expect("bandit is valid")
}

/// Random normalized vector with roughly `sparsity` of its entries zeroed
/// (never all of them).
fn random_dist<R: Rng>(rng: &mut R, n: usize, sparsity: f64) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random::<f64>() < sparsity {
                0.0
            } else {
                rng.random::<f64>() + 0.05
            }
        })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.random_range(0..n)] = 1.0;
    }
    normalize(&mut w);
    w
}

fn normalize(w: &mut [f64]) {
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    // Push the rounding residue into the largest entry so the sum is 1 to
    // within one ulp.
    let residue = 1.0 - w.iter().sum::<f64>();
    let idx = crate::math::argmax(w);
    w[idx] += residue;
}

fn one_hot<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[rng.random_range(0..n)] = 1.0;
    v
}

/// Options for [`random_mdp`].
#[derive(Debug, Clone, Copy)]
pub struct RandomMdpSpec {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    /// One-hot transition rows.
    pub deterministic: bool,
    /// Rewards drawn uniformly from `[-reward_scale, reward_scale]`.
    pub reward_scale: f64,
    /// Fraction of transition entries forced to zero (stochastic case only).
    pub sparsity: f64,
}

impl RandomMdpSpec {
    pub fn new(num_states: usize, num_actions: usize, horizon: usize) -> Self {
        Self {
            num_states,
            num_actions,
            horizon,
            deterministic: false,
            reward_scale: 2.0,
            sparsity: 0.3,
        }
    }

    pub fn deterministic(mut self) -> Self {
        self.deterministic = true;
        self
    }

    pub fn reward_scale(mut self, scale: f64) -> Self {
        self.reward_scale = scale;
        self
    }

    pub fn sparsity(mut self, sparsity: f64) -> Self {
        self.sparsity = sparsity;
        self
    }
}

pub fn random_mdp<R: Rng>(rng: &mut R, spec: RandomMdpSpec) -> TabularMdp {
    let (ns, na) = (spec.num_states, spec.num_actions);
    let transition = (0..ns)
        .map(|_| {
            (0..na)
                .map(|_| {
                    if spec.deterministic {
                        one_hot(rng, ns)
                    } else {
                        random_dist(rng, ns, spec.sparsity)
                    }
                })
                .collect()
        })
        .collect();
    let reward = (0..ns)
        .map(|_| {
            (0..na)
                .map(|_| spec.reward_scale * (2.0 * rng.random::<f64>() - 1.0))
                .collect()
        })
        .collect();
    let initial = random_dist(rng, ns, spec.sparsity);
    TabularMdp::from_parts(spec.horizon, initial, transition, reward)
        .expect("generated MDP is valid")
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::mdp::validate_mdp;

    #[test]
    fn generated_mdps_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for i in 0..200 {
            let mut spec = RandomMdpSpec::new(1 + i % 4, 1 + (i / 4) % 4, 1 + i % 3);
            if i % 2 == 0 {
                spec = spec.deterministic();
            }
            let mdp = random_mdp(&mut rng, spec);
            assert!(validate_mdp(mdp.description()).is_empty());
            if spec.deterministic {
                assert!(mdp.is_deterministic());
            }
        }
    }

    #[test]
    fn risk_mdp_shape() {
        let mdp = risk_mdp();
        assert_eq!(mdp.num_states(), 4);
        assert_eq!(mdp.num_actions(), 2);
        assert_eq!(mdp.horizon(), 2);
        assert!(!mdp.is_deterministic());
    }
}
