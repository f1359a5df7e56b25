//! Finite-horizon tabular control as probabilistic inference.
//!
//! * [`mdp`]: tabular MDPs, validation, temperature and discount transforms.
//! * [`oracle`]: brute-force trajectory enumeration (ground truth).
//! * [`exact`]: sum-product backward messages and the optimistic backup.
//! * [`soft`]: soft value iteration, max-ent policies and the ELBO.
//! * [`learning`]: max-ent policy gradient, actor-critic and soft Q-learning.
//! * [`irl`]: maximum-entropy inverse RL with linear rewards.
//! * [`runner`]: JSON configs, deterministic artifact writing, CLI dispatch.

pub mod error;
pub mod exact;
pub mod irl;
pub mod learning;
pub mod math;
pub mod mdp;
pub mod models;
pub mod oracle;
pub mod policy;
pub mod runner;
pub mod soft;

pub use error::{Error, Result};
pub use mdp::{MdpDescription, SolverConfig, TabularMdp, Trajectory};
pub use policy::{MaxEntPolicy, Policy};
